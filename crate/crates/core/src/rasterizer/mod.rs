//! Extruded-prism city models and their binary silhouettes.
//!
//! A silhouette is the union of every prism's projection, so no depth buffer
//! is kept. Triangles are clipped against the near plane in camera space,
//! projected, and filled with pixel-center sampling under the top-left rule.

mod fill;
mod triangulate;

use alloc::format;
use alloc::vec::Vec;

pub use fill::fill_triangle;
pub use triangulate::{
    segments_intersect, signed_area2, triangle_area, triangulate_footprint, validate_simple,
    Point2,
};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, CameraView, Pose, Vec3, DEFAULT_NEAR};
use crate::mask::BinaryMask;

/// A flat-roofed prism: counter-clockwise footprint extruded from `base_z`
/// by `height` meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub footprint: Vec<Point2>,
    pub base_z: f64,
    pub height: f64,
}

impl Building {
    pub fn new(footprint: Vec<Point2>, base_z: f64, height: f64) -> Result<Self> {
        let b = Building {
            footprint,
            base_z,
            height,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::InvalidPolygon(format!("height {} must be positive", self.height)));
        }
        if !self.base_z.is_finite() {
            return Err(Error::InvalidPolygon("non-finite base_z".into()));
        }
        validate_simple(&self.footprint)?;
        if signed_area2(&self.footprint) <= 0.0 {
            return Err(Error::InvalidPolygon("footprint is clockwise".into()));
        }
        Ok(())
    }

    pub fn top_z(&self) -> f64 {
        self.base_z + self.height
    }

    pub fn area(&self) -> f64 {
        signed_area2(&self.footprint) / 2.0
    }
}

/// Axis-aligned 2-D box, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let ok = [xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) && xmin < xmax && ymin < ymax;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "bounds [{xmin}, {ymin}, {xmax}, {ymax}] must be finite and ordered"
            )));
        }
        Ok(Bounds { xmin, ymin, xmax, ymax })
    }

    pub fn contains(&self, p: Point2) -> bool {
        p[0] >= self.xmin && p[0] <= self.xmax && p[1] >= self.ymin && p[1] <= self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }
}

/// Per-building data reused by every render.
#[derive(Debug, Clone)]
struct Prepared {
    /// Vertices 0..n are the floor ring, n..2n the roof ring.
    vertices: Vec<Vec3>,
    triangles: Vec<[u16; 3]>,
    center: Vec3,
    radius: f64,
}

/// A validated set of buildings inside `bounds`.
#[derive(Debug, Clone)]
pub struct CityModel {
    buildings: Vec<Building>,
    bounds: Bounds,
    prepared: Vec<Prepared>,
}

impl PartialEq for CityModel {
    fn eq(&self, other: &Self) -> bool {
        self.buildings == other.buildings && self.bounds == other.bounds
    }
}

impl CityModel {
    pub fn new(buildings: Vec<Building>, bounds: Bounds) -> Result<Self> {
        let mut prepared = Vec::with_capacity(buildings.len());
        for (index, b) in buildings.iter().enumerate() {
            let wrap = |e: Error| Error::InvalidBuilding {
                index,
                reason: format!("{e}"),
            };
            b.validate().map_err(wrap)?;
            if let Some(v) = b.footprint.iter().find(|v| !bounds.contains(**v)) {
                return Err(wrap(Error::InvalidPolygon(format!(
                    "vertex ({}, {}) outside bounds",
                    v[0], v[1]
                ))));
            }
            if b.footprint.len() > u16::MAX as usize / 2 {
                return Err(wrap(Error::InvalidPolygon("too many vertices".into())));
            }
            prepared.push(prepare(b).map_err(wrap)?);
        }
        Ok(CityModel {
            buildings,
            bounds,
            prepared,
        })
    }

    pub fn empty(bounds: Bounds) -> Self {
        CityModel {
            buildings: Vec::new(),
            bounds,
            prepared: Vec::new(),
        }
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.buildings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buildings.is_empty()
    }

    pub fn max_height(&self) -> f64 {
        self.buildings.iter().map(|b| b.top_z()).fold(0.0, f64::max)
    }
}

fn mesh_indices(n: usize, roof: &[[usize; 3]]) -> Vec<[u16; 3]> {
    let mut tris = Vec::with_capacity(2 * (n - 2) + 2 * n);
    for t in roof {
        tris.push([(t[0] + n) as u16, (t[1] + n) as u16, (t[2] + n) as u16]);
    }
    for t in roof {
        // floor faces down
        tris.push([t[0] as u16, t[2] as u16, t[1] as u16]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let (b0, b1, t0, t1) = (i as u16, j as u16, (i + n) as u16, (j + n) as u16);
        tris.push([b0, b1, t1]);
        tris.push([b0, t1, t0]);
    }
    tris
}

fn ring_vertices(b: &Building) -> Vec<Vec3> {
    let floor = b.footprint.iter().map(|p| Vec3::new(p[0], p[1], b.base_z));
    let roof = b.footprint.iter().map(|p| Vec3::new(p[0], p[1], b.top_z()));
    floor.chain(roof).collect()
}

fn prepare(b: &Building) -> Result<Prepared> {
    let roof = triangulate_footprint(&b.footprint)?;
    let vertices = ring_vertices(b);
    let n = vertices.len() as f64;
    let center = vertices.iter().fold(Vec3::zeros(), |acc, v| acc + v) / n;
    let radius = vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
    Ok(Prepared {
        triangles: mesh_indices(b.footprint.len(), &roof),
        vertices,
        center,
        radius,
    })
}

/// World-space triangles of a building: roof, floor, then two per wall.
pub fn prism_mesh(building: &Building) -> Result<Vec<[Vec3; 3]>> {
    building.validate()?;
    let roof = triangulate_footprint(&building.footprint)?;
    let v = ring_vertices(building);
    Ok(mesh_indices(building.footprint.len(), &roof)
        .into_iter()
        .map(|t| [v[t[0] as usize], v[t[1] as usize], v[t[2] as usize]])
        .collect())
}

/// Camera-space planes bounding the visible region (normal · p ≥ 0 inside).
struct Frustum {
    sides: [Vec3; 4],
    near: f64,
}

impl Frustum {
    fn new(k: &CameraIntrinsics, near: f64) -> Self {
        let (w, h) = (k.width as f64, k.height as f64);
        // u = fx X/Z + cx >= 0  <=>  fx X + cx Z >= 0, and so on.
        let planes = [
            Vec3::new(k.fx, 0.0, k.cx),
            Vec3::new(-k.fx, 0.0, w - k.cx),
            Vec3::new(0.0, k.fy, k.cy),
            Vec3::new(0.0, -k.fy, h - k.cy),
        ];
        Frustum {
            sides: planes.map(|p| p.normalize()),
            near,
        }
    }

    fn culls(&self, center: &Vec3, radius: f64) -> bool {
        center.z + radius < self.near || self.sides.iter().any(|n| n.dot(center) < -radius)
    }
}

/// Reusable rendering state for one camera resolution.
pub struct Renderer<'a> {
    model: &'a CityModel,
    intrinsics: CameraIntrinsics,
    near: f64,
    scratch: Vec<Vec3>,
}

impl<'a> Renderer<'a> {
    /// `intrinsics` must already be scaled to the output resolution.
    pub fn new(model: &'a CityModel, intrinsics: CameraIntrinsics, near: f64) -> Self {
        Renderer {
            model,
            intrinsics,
            near,
            scratch: Vec::new(),
        }
    }

    pub fn render(&mut self, pose: &Pose) -> BinaryMask {
        let mut mask = BinaryMask::new(self.intrinsics.width, self.intrinsics.height);
        self.render_into(pose, &mut mask);
        mask
    }

    pub fn render_into(&mut self, pose: &Pose, mask: &mut BinaryMask) {
        self.draw(pose, mask, false);
    }

    // Each prism is closed, so the faces turned away from the camera already
    // cover its silhouette; `all_faces` exists for testing that claim.
    fn draw(&mut self, pose: &Pose, mask: &mut BinaryMask, all_faces: bool) {
        assert_eq!(mask.dims(), (self.intrinsics.width, self.intrinsics.height));
        mask.clear();
        let view = CameraView::new(self.intrinsics, pose, self.near);
        let frustum = Frustum::new(&self.intrinsics, self.near);
        for prep in &self.model.prepared {
            let c = view.to_camera(&prep.center);
            if frustum.culls(&c, prep.radius) {
                continue;
            }
            self.scratch.clear();
            self.scratch
                .extend(prep.vertices.iter().map(|v| view.to_camera(v)));
            for t in &prep.triangles {
                let tri = [
                    self.scratch[t[0] as usize],
                    self.scratch[t[1] as usize],
                    self.scratch[t[2] as usize],
                ];
                if all_faces || (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).dot(&tri[0]) > 0.0 {
                    draw_camera_triangle(&view, &tri, mask);
                }
            }
        }
    }
}

/// Point where segment `inside -> outside` crosses `z = near`.
#[inline]
fn clip_point(inside: &Vec3, outside: &Vec3, near: f64) -> Vec3 {
    let t = (near - inside.z) / (outside.z - inside.z);
    inside + (outside - inside) * t
}

/// Clips a camera-space triangle to `z >= near`, projects and fills it.
fn draw_camera_triangle(view: &CameraView, tri: &[Vec3; 3], mask: &mut BinaryMask) {
    let near = view.near;
    let inside = [tri[0].z >= near, tri[1].z >= near, tri[2].z >= near];
    let count = inside.iter().filter(|&&b| b).count();
    if count == 0 {
        return;
    }
    let mut poly = [(0.0, 0.0); 4];
    let mut n = 0;
    if count == 3 {
        for v in tri {
            poly[n] = view.project_camera(v);
            n += 1;
        }
    } else {
        // Sutherland-Hodgman against a single plane. Crossing points are
        // computed from the inside endpoint so neighbouring triangles that
        // share the edge get identical vertices.
        for i in 0..3 {
            let j = (i + 1) % 3;
            let (a, b) = (&tri[i], &tri[j]);
            match (inside[i], inside[j]) {
                (true, true) => {
                    poly[n] = view.project_camera(b);
                    n += 1;
                }
                (true, false) => {
                    poly[n] = view.project_camera(&clip_point(a, b, near));
                    n += 1;
                }
                (false, true) => {
                    poly[n] = view.project_camera(&clip_point(b, a, near));
                    poly[n + 1] = view.project_camera(b);
                    n += 2;
                }
                (false, false) => {}
            }
        }
    }
    for k in 1..n - 1 {
        fill_triangle(mask, poly[0], poly[k], poly[k + 1]);
    }
}

/// Renders the union silhouette of `model` seen from `pose` at `out_width x out_height`.
pub fn render_silhouette(
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    out_width: u32,
    out_height: u32,
) -> BinaryMask {
    render_silhouette_with_near(model, intrinsics, pose, out_width, out_height, DEFAULT_NEAR)
}

pub fn render_silhouette_with_near(
    model: &CityModel,
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    out_width: u32,
    out_height: u32,
    near: f64,
) -> BinaryMask {
    Renderer::new(model, intrinsics.scaled(out_width, out_height), near).render(pose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square(cx: f64, cy: f64, side: f64) -> Vec<Point2> {
        let h = side / 2.0;
        vec![[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]]
    }

    fn bounds() -> Bounds {
        Bounds::new(-100.0, -100.0, 100.0, 100.0).unwrap()
    }

    #[test]
    fn mesh_counts() {
        let quad = Building::new(square(0.0, 0.0, 4.0), 0.0, 3.0).unwrap();
        assert_eq!(prism_mesh(&quad).unwrap().len(), 12);
        let tri = Building::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.0, 1.0).unwrap();
        assert_eq!(prism_mesh(&tri).unwrap().len(), 8);
        let l = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 1.0], [1.0, 1.0], [1.0, 3.0], [0.0, 3.0]];
        let l = Building::new(l, 2.0, 1.0).unwrap();
        assert_eq!(prism_mesh(&l).unwrap().len(), 20);
    }

    #[test]
    fn empty_model_renders_nothing() {
        let m = CityModel::empty(bounds());
        let pose = Pose::new(0.0, 0.0, 50.0, 0.0, -45.0, 0.0).unwrap();
        let mask = render_silhouette(&m, &CameraIntrinsics::default_uav(), &pose, 301, 224);
        assert!(mask.is_empty());
    }

    #[test]
    fn nadir_square() {
        let b = Building::new(square(0.0, 0.0, 10.0), 0.0, 10.0).unwrap();
        let m = CityModel::new(vec![b], bounds()).unwrap();
        let k = CameraIntrinsics::default_uav();
        let pose = Pose::new(0.0, 0.0, 110.0, 0.0, -90.0, 0.0).unwrap();
        let mask = render_silhouette(&m, &k, &pose, 602, 448);
        // roof at 100 m spans [278.6, 323.4) x [201.6, 246.4): 44 centers per side
        let got = mask.count_ones() as f64;
        assert_eq!(got, 44.0 * 44.0);
        let (mut sx, mut sy) = (0.0, 0.0);
        for y in 0..448 {
            for x in 0..602 {
                if mask.get(x, y) {
                    sx += x as f64 + 0.5;
                    sy += y as f64 + 0.5;
                }
            }
        }
        assert!((sx / got - 301.0).abs() < 0.6 && (sy / got - 224.0).abs() < 0.6);

        let up = Pose::new(0.0, 0.0, 110.0, 0.0, 90.0, 0.0).unwrap();
        assert!(render_silhouette(&m, &k, &up, 602, 448).is_empty());
    }

    #[test]
    fn camera_inside_building_still_renders() {
        let b = Building::new(square(0.0, 0.0, 20.0), 0.0, 30.0).unwrap();
        let m = CityModel::new(vec![b], bounds()).unwrap();
        let pose = Pose::new(0.0, 0.0, 10.0, 0.0, 0.0, 0.0).unwrap();
        let mask = render_silhouette(&m, &CameraIntrinsics::default_uav(), &pose, 301, 224);
        // walls surround the camera, every pixel sees one
        assert_eq!(mask.count_ones(), mask.pixel_count());
    }

    #[test]
    fn invalid_buildings_named_by_index() {
        let ok = Building::new(square(0.0, 0.0, 4.0), 0.0, 3.0).unwrap();
        let outside = Building {
            footprint: square(99.0, 0.0, 4.0),
            base_z: 0.0,
            height: 3.0,
        };
        match CityModel::new(vec![ok.clone(), outside], bounds()) {
            Err(Error::InvalidBuilding { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        let flat = Building { height: 0.0, ..ok };
        assert!(flat.validate().is_err());
    }

    #[test]
    fn away_faces_match_full_mesh() {
        use crate::synth::{generate_city, CitySpec};
        let city = generate_city(&CitySpec { building_count: 80, seed: 4, ..Default::default() }).unwrap().model;
        let k = CameraIntrinsics::default_uav().scaled(301, 224);
        for (i, (z, pitch)) in [(120.0, -40.0), (15.0, -5.0), (300.0, -89.0), (5.0, 10.0)].into_iter().enumerate() {
            let pose = Pose::new(-30.0 + 17.0 * i as f64, 20.0, z, 37.0 * i as f64, pitch, 0.0).unwrap();
            let mut r = Renderer::new(&city, k, DEFAULT_NEAR);
            let mut a = BinaryMask::new(301, 224);
            let mut b = BinaryMask::new(301, 224);
            r.draw(&pose, &mut a, false);
            r.draw(&pose, &mut b, true);
            assert_eq!(a, b, "pose {i}");
        }
    }
}
