//! Flat ray-cast rasterizer producing per-object masks and occlusion ratios.
//!
//! One ray per pixel centre, nearest hit wins, ties to the lower object id. Objects are
//! depth-ordered by the distance from the eye to their centre; that order decides which
//! objects count as occluders of another.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::mask::{BBox, Mask};
use crate::scene::{CameraSpec, ObjectId, ObjectSpec, SceneGraph};
use crate::vocab::{Shape, Visibility};
use crate::{Error, Result};

/// Occlusion ratios strictly above this are "partially visible".
pub const PARTIAL_VISIBILITY_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityClass {
    FullyVisible,
    PartiallyVisible,
    Ambiguous,
}

impl VisibilityClass {
    /// The `visible` module flag that selects this class, if any.
    pub fn flag(self) -> Option<Visibility> {
        match self {
            VisibilityClass::FullyVisible => Some(Visibility::Fully),
            VisibilityClass::PartiallyVisible => Some(Visibility::Partially),
            VisibilityClass::Ambiguous => None,
        }
    }
}

/// `0` is fully visible, above 0.2 partially visible, anything in between (0.2 included)
/// ambiguous.
pub fn classify_visibility(ratio: f64) -> VisibilityClass {
    if ratio == 0.0 {
        VisibilityClass::FullyVisible
    } else if ratio > PARTIAL_VISIBILITY_THRESHOLD {
        VisibilityClass::PartiallyVisible
    } else {
        VisibilityClass::Ambiguous
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRender {
    pub id: ObjectId,
    /// Silhouette ignoring every other object.
    pub full_mask: Mask,
    /// Pixels where this object is the nearest hit.
    pub visible_mask: Mask,
    /// Tight box around `full_mask`; `None` when off-screen.
    pub bbox: Option<BBox>,
    pub occlusion_ratio: Option<f64>,
    pub visibility: Option<VisibilityClass>,
    /// Eye-to-centre distance used for depth ordering.
    pub depth: f64,
}

impl ObjectRender {
    pub fn off_screen(&self) -> bool {
        self.full_mask.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderResult {
    pub width: usize,
    pub height: usize,
    pub objects: Vec<ObjectRender>,
    /// Row-major nearest object per pixel.
    pub depth_buffer: Vec<Option<ObjectId>>,
}

impl RenderResult {
    pub fn object(&self, id: ObjectId) -> Result<&ObjectRender> {
        self.objects.get(id).ok_or(Error::InvalidReference(id))
    }

    pub fn visibility(&self, id: ObjectId) -> Option<VisibilityClass> {
        self.objects.get(id).and_then(|o| o.visibility)
    }

    /// Union of the visible masks of `ids`.
    pub fn union_visible<'a>(&self, ids: impl IntoIterator<Item = &'a ObjectId>) -> Result<Mask> {
        let mut out = Mask::new(self.width, self.height);
        for &id in ids {
            out = out.union(&self.object(id)?.visible_mask)?;
        }
        Ok(out)
    }

    /// Pixels covered by any object.
    pub fn occupied(&self) -> Mask {
        let mut m = Mask::new(self.width, self.height);
        for (i, owner) in self.depth_buffer.iter().enumerate() {
            if owner.is_some() {
                m.set(i % self.width, i / self.width, true);
            }
        }
        m
    }
}

/// Ratio of `id`'s bounding box covered by the visible pixels of strictly nearer objects.
pub fn occlusion_ratio(render: &RenderResult, id: ObjectId) -> Result<f64> {
    let target = render.object(id)?;
    let bbox = target.bbox.ok_or(Error::OffScreen(id))?;
    let mut covered = 0usize;
    for y in bbox.y0..=bbox.y1 {
        for x in bbox.x0..=bbox.x1 {
            if let Some(owner) = render.depth_buffer[y * render.width + x] {
                if owner != id && render.objects[owner].depth < target.depth {
                    covered += 1;
                }
            }
        }
    }
    Ok(covered as f64 / bbox.area() as f64)
}

struct Ray {
    origin: DVec3,
    dir: DVec3,
}

struct Projector {
    eye: DVec3,
    forward: DVec3,
    right: DVec3,
    up: DVec3,
    tan_half: f64,
    aspect: f64,
    width: usize,
    height: usize,
}

impl Projector {
    fn new(camera: &CameraSpec) -> Self {
        let forward = camera.forward();
        let right = forward.cross(camera.up).normalize();
        let up = right.cross(forward);
        let (width, height) = camera.image_size;
        Projector {
            eye: camera.eye,
            forward,
            right,
            up,
            tan_half: (camera.vertical_fov.to_radians() / 2.0).tan(),
            aspect: width as f64 / height as f64,
            width,
            height,
        }
    }

    fn ray(&self, px: usize, py: usize) -> Ray {
        let sx = ((px as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * self.tan_half * self.aspect;
        let sy = (1.0 - (py as f64 + 0.5) / self.height as f64 * 2.0) * self.tan_half;
        Ray {
            origin: self.eye,
            dir: (self.forward + sx * self.right + sy * self.up).normalize(),
        }
    }

    /// Continuous pixel coordinates of a world point; `None` behind the eye.
    fn project(&self, p: DVec3) -> Option<(f64, f64)> {
        let v = p - self.eye;
        let z = v.dot(self.forward);
        if z <= 1e-9 {
            return None;
        }
        let sx = v.dot(self.right) / z / (self.tan_half * self.aspect);
        let sy = v.dot(self.up) / z / self.tan_half;
        Some((
            (sx + 1.0) / 2.0 * self.width as f64,
            (1.0 - sy) / 2.0 * self.height as f64,
        ))
    }

    /// Pixel rectangle that may contain the object's silhouette.
    fn cull_rect(&self, obj: &ObjectSpec) -> Option<(usize, usize, usize, usize)> {
        let r = bounding_radius(obj);
        let c = obj.position;
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for corner in 0..8 {
            let offset = DVec3::new(
                if corner & 1 == 0 { -r } else { r },
                if corner & 2 == 0 { -r } else { r },
                if corner & 4 == 0 { -r } else { r },
            );
            match self.project(c + offset) {
                Some((x, y)) => {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
                // Straddles the eye plane: scan the whole image.
                None => return Some((0, 0, self.width - 1, self.height - 1)),
            }
        }
        let clamp = |v: f64, hi: usize| v.floor().clamp(0.0, hi as f64) as usize;
        if x1 < 0.0 || y1 < 0.0 || x0 >= self.width as f64 || y0 >= self.height as f64 {
            return None;
        }
        Some((
            clamp(x0 - 1.0, self.width - 1),
            clamp(y0 - 1.0, self.height - 1),
            clamp(x1 + 1.0, self.width - 1),
            clamp(y1 + 1.0, self.height - 1),
        ))
    }
}

fn bounding_radius(obj: &ObjectSpec) -> f64 {
    let r = obj.base_radius();
    match obj.shape {
        Shape::Sphere => r,
        Shape::Cube => r * 3f64.sqrt(),
        Shape::Cylinder => r * std::f64::consts::SQRT_2,
    }
}

const EPS: f64 = 1e-9;

fn hit_sphere(ray: &Ray, center: DVec3, radius: f64) -> Option<f64> {
    let oc = ray.origin - center;
    let b = oc.dot(ray.dir);
    let c = oc.length_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    [-b - s, -b + s].into_iter().find(|&t| t > EPS)
}

/// Slab test against a box of half-extent `half` centred at the origin in local space.
fn hit_box_local(origin: DVec3, dir: DVec3, half: DVec3) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for axis in 0..3 {
        let (o, d, h) = (origin[axis], dir[axis], half[axis]);
        if d.abs() < 1e-15 {
            if o.abs() > h {
                return None;
            }
            continue;
        }
        let (a, b) = ((-h - o) / d, (h - o) / d);
        t_near = t_near.max(a.min(b));
        t_far = t_far.min(a.max(b));
        if t_near > t_far {
            return None;
        }
    }
    if t_near > EPS {
        Some(t_near)
    } else if t_far > EPS {
        Some(t_far)
    } else {
        None
    }
}

fn hit_cube(ray: &Ray, obj: &ObjectSpec) -> Option<f64> {
    let (s, c) = (-obj.rotation.to_radians()).sin_cos();
    let rotate = |v: DVec3| DVec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z);
    let half = obj.base_radius();
    hit_box_local(rotate(ray.origin - obj.position), rotate(ray.dir), DVec3::splat(half))
}

fn hit_cylinder(ray: &Ray, obj: &ObjectSpec) -> Option<f64> {
    let r = obj.base_radius();
    let o = ray.origin - obj.position;
    let d = ray.dir;
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t > EPS && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };
    // Side wall, |z| <= r in local space.
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-15 {
        let b = o.x * d.x + o.y * d.y;
        let cc = o.x * o.x + o.y * o.y - r * r;
        let disc = b * b - a * cc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            for t in [(-b - s) / a, (-b + s) / a] {
                if (o.z + t * d.z).abs() <= r {
                    consider(t);
                }
            }
        }
    }
    // Caps.
    if d.z.abs() > 1e-15 {
        for cap in [-r, r] {
            let t = (cap - o.z) / d.z;
            let (x, y) = (o.x + t * d.x, o.y + t * d.y);
            if x * x + y * y <= r * r {
                consider(t);
            }
        }
    }
    best
}

fn intersect(ray: &Ray, obj: &ObjectSpec) -> Option<f64> {
    match obj.shape {
        Shape::Sphere => hit_sphere(ray, obj.position, obj.base_radius()),
        Shape::Cube => hit_cube(ray, obj),
        Shape::Cylinder => hit_cylinder(ray, obj),
    }
}

pub fn rasterize(scene: &SceneGraph) -> RenderResult {
    let proj = Projector::new(&scene.camera);
    let (width, height) = scene.camera.image_size;
    let mut nearest: Vec<Option<(f64, ObjectId)>> = vec![None; width * height];
    let mut full_masks = Vec::with_capacity(scene.objects.len());

    for (id, obj) in scene.objects.iter().enumerate() {
        let mut full = Mask::new(width, height);
        if let Some((x0, y0, x1, y1)) = proj.cull_rect(obj) {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if let Some(t) = intersect(&proj.ray(x, y), obj) {
                        full.set(x, y, true);
                        let slot = &mut nearest[y * width + x];
                        if slot.is_none_or(|(best, _)| t < best) {
                            *slot = Some((t, id));
                        }
                    }
                }
            }
        }
        full_masks.push(full);
    }

    let depth_buffer: Vec<Option<ObjectId>> = nearest.iter().map(|n| n.map(|(_, id)| id)).collect();
    let mut visible: Vec<Mask> = (0..scene.objects.len()).map(|_| Mask::new(width, height)).collect();
    for (i, owner) in depth_buffer.iter().enumerate() {
        if let Some(id) = owner {
            visible[*id].set(i % width, i / width, true);
        }
    }

    let objects = scene
        .objects
        .iter()
        .zip(full_masks.into_iter().zip(visible))
        .enumerate()
        .map(|(id, (obj, (full_mask, visible_mask)))| ObjectRender {
            id,
            bbox: full_mask.bbox(),
            full_mask,
            visible_mask,
            occlusion_ratio: None,
            visibility: None,
            depth: (obj.position - scene.camera.eye).length(),
        })
        .collect();

    let mut result = RenderResult {
        width,
        height,
        objects,
        depth_buffer,
    };
    for id in 0..result.objects.len() {
        if let Ok(ratio) = occlusion_ratio(&result, id) {
            result.objects[id].occlusion_ratio = Some(ratio);
            result.objects[id].visibility = Some(classify_visibility(ratio));
        }
    }
    result
}

/// Screen-space radius in pixels of a sphere centred on the optical axis.
pub fn projected_sphere_radius(camera: &CameraSpec, distance: f64, radius: f64) -> f64 {
    let angular = (radius / distance).asin();
    angular.tan() / (camera.vertical_fov.to_radians() / 2.0).tan() * camera.image_size.1 as f64 / 2.0
}
