//! Geometric primitives: rotations, camera poses, pinhole projection and
//! oriented boxes with labelled faces.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, Unit, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A point or direction in reconstruction units.
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("box dimensions must be positive, got ({0}, {1}, {2})")]
    NonPositiveDims(f64, f64, f64),
    #[error("invalid intrinsics: {0}")]
    Intrinsics(String),
    #[error("zero-norm quaternion")]
    ZeroQuaternion,
    #[error("gimbal angle out of range: {0}")]
    GimbalRange(String),
    #[error("invalid face map: {0}")]
    FaceMap(String),
    #[error("unknown face `{0}`")]
    UnknownFace(String),
    #[error("unknown face label `{0}`")]
    UnknownLabel(String),
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let reduced = deg.rem_euclid(360.0);
    if reduced == 0.0 {
        (0.0, 1.0)
    } else if reduced == 90.0 {
        (1.0, 0.0)
    } else if reduced == 180.0 {
        (0.0, -1.0)
    } else if reduced == 270.0 {
        (-1.0, 0.0)
    } else {
        deg.to_radians().sin_cos()
    }
}

/// Proper rotation stored as a unit quaternion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    /// Builds from quaternion components `(w, x, y, z)`, normalising.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let q = Quaternion::new(w, x, y, z);
        if ![w, x, y, z].iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite("quaternion"));
        }
        let n = q.norm();
        if n == 0.0 {
            return Err(GeometryError::ZeroQuaternion);
        }
        // Already-unit input is kept bit for bit so serialisation round-trips exactly.
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self(UnitQuaternion::new_unchecked(q)));
        }
        Ok(Self(UnitQuaternion::from_quaternion(q)))
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        Self(UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle))
    }

    /// Rotation about world +z.
    pub fn from_yaw(angle: f64) -> Self {
        Self(UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle))
    }

    /// Builds from a matrix whose columns are an orthonormal right-handed basis.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let r = Rotation3::from_matrix_unchecked(*m);
        Self(UnitQuaternion::from_rotation_matrix(&r))
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Self(UnitQuaternion::new_normalize(q.into_inner()))
    }

    pub fn unit_quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    /// Quaternion components in `(w, x, y, z)` order.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        *self.0.to_rotation_matrix().matrix()
    }

    /// Column `i` of the rotation matrix (the rotated basis vector `e_i`).
    pub fn axis(&self, i: usize) -> Vec3 {
        self.0 * Vec3::ith(i, 1.0)
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn inverse_rotate(&self, v: &Vec3) -> Vec3 {
        self.0.inverse_transform_vector(v)
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    /// `self ∘ other`, renormalised.
    pub fn compose(&self, other: &Rotation) -> Self {
        Self(UnitQuaternion::new_normalize((self.0 * other.0).into_inner()))
    }

    /// Geodesic angle between two rotations in radians, in `[0, π]`.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let d = self.0.quaternion().dot(other.0.quaternion()).abs().min(1.0);
        2.0 * d.acos()
    }
}

impl Serialize for Rotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.wxyz().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        Rotation::from_wxyz(w, x, y, z).map_err(serde::de::Error::custom)
    }
}

/// World-from-camera rigid transform. Camera frame: +x right, +y down, +z forward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub rotation: Rotation,
    pub translation: Vec3,
    pub frame: usize,
}

impl CameraPose {
    pub fn new(rotation: Rotation, translation: Vec3, frame: usize) -> Self {
        Self { rotation, translation, frame }
    }

    /// Camera pose at `eye` looking at `target`, with world +z as the up reference.
    pub fn look_at(eye: Vec3, target: Vec3, frame: usize) -> Option<Self> {
        let forward = (target - eye).try_normalize(1e-12)?;
        let right = forward.cross(&Vec3::z()).try_normalize(1e-12)?;
        let down = forward.cross(&right);
        let m = Matrix3::from_columns(&[right, down, forward]);
        Some(Self::new(Rotation::from_matrix(&m), eye, frame))
    }

    /// Optical centre in world coordinates.
    pub fn centre(&self) -> Vec3 {
        self.translation
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse_rotate(&(p - self.translation))
    }

    pub fn to_world(&self, p_cam: &Vec3) -> Vec3 {
        self.rotation.rotate(p_cam) + self.translation
    }

    /// Row-major 4×4 homogeneous matrix.
    pub fn matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_matrix4(m: &Matrix4<f64>, frame: usize) -> Self {
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let t: Vec3 = m.fixed_view::<3, 1>(0, 3).into_owned();
        Self::new(Rotation::from_matrix(&r), t, frame)
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::Intrinsics(format!("focal lengths must be positive ({}, {})", self.fx, self.fy)));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64 && self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(GeometryError::Intrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Projects a camera-frame point; `None` when it is not in front of the camera.
    pub fn project_camera(&self, p: &Vec3) -> Option<Vector2<f64>> {
        if p.z <= 0.0 {
            return None;
        }
        Some(Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Unnormalised camera-frame ray direction through pixel centre `(u, v)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Projects world point `p` to pixel coordinates, `None` when behind the camera.
pub fn project(pose: &CameraPose, k: &Intrinsics, p: &Vec3) -> Option<Vector2<f64>> {
    k.project_camera(&pose.to_camera(p))
}

/// One of the six faces of a box, named by its local outward axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceId {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl FaceId {
    pub const ALL: [FaceId; 6] = [FaceId::PosX, FaceId::NegX, FaceId::PosY, FaceId::NegY, FaceId::PosZ, FaceId::NegZ];

    pub fn axis(self) -> usize {
        match self {
            FaceId::PosX | FaceId::NegX => 0,
            FaceId::PosY | FaceId::NegY => 1,
            FaceId::PosZ | FaceId::NegZ => 2,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            FaceId::PosX | FaceId::PosY | FaceId::PosZ => 1.0,
            _ => -1.0,
        }
    }

    pub fn opposite(self) -> FaceId {
        match self {
            FaceId::PosX => FaceId::NegX,
            FaceId::NegX => FaceId::PosX,
            FaceId::PosY => FaceId::NegY,
            FaceId::NegY => FaceId::PosY,
            FaceId::PosZ => FaceId::NegZ,
            FaceId::NegZ => FaceId::PosZ,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Outward normal in the box's local frame.
    pub fn local_normal(self) -> Vec3 {
        Vec3::ith(self.axis(), self.sign())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaceId::PosX => "+x",
            FaceId::NegX => "-x",
            FaceId::PosY => "+y",
            FaceId::NegY => "-y",
            FaceId::PosZ => "+z",
            FaceId::NegZ => "-z",
        }
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaceId {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaceId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| GeometryError::UnknownFace(s.to_string()))
    }
}

impl Serialize for FaceId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for FaceId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Anatomical label of a box face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceLabel {
    Front,
    Back,
    Left,
    Right,
    Top,
    Bottom,
}

impl FaceLabel {
    pub const ALL: [FaceLabel; 6] =
        [FaceLabel::Front, FaceLabel::Back, FaceLabel::Left, FaceLabel::Right, FaceLabel::Top, FaceLabel::Bottom];

    /// The five labels scored by viewpoint analysis (bottom is never seen from the air).
    pub const SCORED: [FaceLabel; 5] = [FaceLabel::Front, FaceLabel::Back, FaceLabel::Left, FaceLabel::Right, FaceLabel::Top];

    pub fn opposite(self) -> FaceLabel {
        match self {
            FaceLabel::Front => FaceLabel::Back,
            FaceLabel::Back => FaceLabel::Front,
            FaceLabel::Left => FaceLabel::Right,
            FaceLabel::Right => FaceLabel::Left,
            FaceLabel::Top => FaceLabel::Bottom,
            FaceLabel::Bottom => FaceLabel::Top,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaceLabel::Front => "front",
            FaceLabel::Back => "back",
            FaceLabel::Left => "left",
            FaceLabel::Right => "right",
            FaceLabel::Top => "top",
            FaceLabel::Bottom => "bottom",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaceLabel {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaceLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| GeometryError::UnknownLabel(s.to_string()))
    }
}

/// Total, bijective assignment of labels to box faces with opposite faces
/// carrying opposite labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SemanticFaceMap {
    labels: [FaceLabel; 6],
}

impl Default for SemanticFaceMap {
    /// Front = +x, left = +y, top = +z.
    fn default() -> Self {
        Self {
            labels: [
                FaceLabel::Front,
                FaceLabel::Back,
                FaceLabel::Left,
                FaceLabel::Right,
                FaceLabel::Top,
                FaceLabel::Bottom,
            ],
        }
    }
}

impl SemanticFaceMap {
    /// Labels indexed by [`FaceId::index`].
    pub fn new(labels: [FaceLabel; 6]) -> Result<Self, GeometryError> {
        let map = Self { labels };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let mut seen = [false; 6];
        for label in self.labels {
            if std::mem::replace(&mut seen[label.index()], true) {
                return Err(GeometryError::FaceMap(format!("label {label} assigned twice")));
            }
        }
        for face in FaceId::ALL {
            if self.label(face.opposite()) != self.label(face).opposite() {
                return Err(GeometryError::FaceMap(format!(
                    "faces {face} and {} carry non-opposite labels",
                    face.opposite()
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self, face: FaceId) -> FaceLabel {
        self.labels[face.index()]
    }

    pub fn face(&self, label: FaceLabel) -> FaceId {
        FaceId::ALL
            .into_iter()
            .find(|f| self.labels[f.index()] == label)
            .expect("face map is bijective")
    }

    pub fn labels(&self) -> &[FaceLabel; 6] {
        &self.labels
    }
}

impl Serialize for SemanticFaceMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(6))?;
        for face in FaceId::ALL {
            m.serialize_entry(face.as_str(), self.label(face).as_str())?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for SemanticFaceMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = std::collections::BTreeMap::<FaceId, FaceLabel>::deserialize(d)?;
        if raw.len() != 6 {
            return Err(serde::de::Error::custom(format!("face map needs 6 entries, got {}", raw.len())));
        }
        let mut labels = [FaceLabel::Front; 6];
        for (face, label) in raw {
            labels[face.index()] = label;
        }
        SemanticFaceMap::new(labels).map_err(serde::de::Error::custom)
    }
}

/// Oriented box `(centre, dims, rotation)`; dims are `(l, w, h)` along local x, y, z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub dims: Vec3,
    pub rotation: Rotation,
    pub track_id: u32,
    pub frame: usize,
}

impl OrientedBox {
    pub fn new(center: Vec3, dims: Vec3, rotation: Rotation, track_id: u32, frame: usize) -> Result<Self, GeometryError> {
        let b = Self { center, dims, rotation, track_id, frame };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.center.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite("box centre"));
        }
        if !(self.dims.iter().all(|&d| d > 0.0 && d.is_finite())) {
            return Err(GeometryError::NonPositiveDims(self.dims.x, self.dims.y, self.dims.z));
        }
        Ok(())
    }

    pub fn half_extents(&self) -> Vec3 {
        self.dims * 0.5
    }

    /// Local axis `i` in world coordinates (column `i` of R).
    pub fn axis(&self, i: usize) -> Vec3 {
        self.rotation.axis(i)
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse_rotate(&(p - self.center))
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        self.rotation.rotate(local) + self.center
    }

    /// Corners `c + R·(±l/2, ±w/2, ±h/2)`; bit 0/1/2 of the index selects the
    /// positive x/y/z side.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents();
        std::array::from_fn(|i| {
            let local = Vec3::new(
                if i & 1 != 0 { h.x } else { -h.x },
                if i & 2 != 0 { h.y } else { -h.y },
                if i & 4 != 0 { h.z } else { -h.z },
            );
            self.to_world(&local)
        })
    }

    pub fn face_normal(&self, face: FaceId) -> Vec3 {
        self.axis(face.axis()) * face.sign()
    }

    pub fn face_center(&self, face: FaceId) -> Vec3 {
        self.center + self.face_normal(face) * self.half_extents()[face.axis()]
    }

    /// The two in-face local axes `(u, v)` of a face, chosen so `u × v` is the
    /// outward normal.
    pub fn face_frame(face: FaceId) -> (usize, usize) {
        let a = face.axis();
        let (u, v) = ((a + 1) % 3, (a + 2) % 3);
        if face.sign() > 0.0 {
            (u, v)
        } else {
            (v, u)
        }
    }

    /// World point on a face at in-face coordinates `(s, t) ∈ [-1, 1]²`.
    pub fn face_point(&self, face: FaceId, s: f64, t: f64) -> Vec3 {
        let h = self.half_extents();
        let (u, v) = Self::face_frame(face);
        let mut local = face.local_normal() * h[face.axis()];
        local[u] = s * h[u];
        local[v] = t * h[v];
        self.to_world(&local)
    }

    /// Face corners in perimeter order, counter-clockwise seen from outside.
    pub fn face_corners(&self, face: FaceId) -> [Vec3; 4] {
        [
            self.face_point(face, -1.0, -1.0),
            self.face_point(face, 1.0, -1.0),
            self.face_point(face, 1.0, 1.0),
            self.face_point(face, -1.0, 1.0),
        ]
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        let local = self.to_local(p);
        let h = self.half_extents();
        (0..3).all(|i| local[i].abs() <= h[i] + tol)
    }

    pub fn volume(&self) -> f64 {
        self.dims.x * self.dims.y * self.dims.z
    }

    /// Distance from `p` to the box surface (zero on the surface).
    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        let local = self.to_local(p);
        let h = self.half_extents();
        let outside = Vec3::from_fn(|i, _| (local[i].abs() - h[i]).max(0.0)).norm();
        if outside > 0.0 {
            outside
        } else {
            (0..3).map(|i| h[i] - local[i].abs()).fold(f64::INFINITY, f64::min)
        }
    }
}

/// Outward unit normal of `face`.
pub fn face_normal(b: &OrientedBox, face: FaceId) -> Vec3 {
    b.face_normal(face)
}

/// Gimbal attitude for one frame, in degrees (pitch −90 = nadir).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GimbalSample {
    pub frame: usize,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl GimbalSample {
    pub fn new(frame: usize, pitch_deg: f64, roll_deg: f64) -> Result<Self, GeometryError> {
        for (name, v) in [("pitch", pitch_deg), ("roll", roll_deg)] {
            if !(-180.0..=180.0).contains(&v) {
                return Err(GeometryError::GimbalRange(format!("{name} {v}")));
            }
        }
        Ok(Self { frame, pitch_deg, roll_deg })
    }
}
