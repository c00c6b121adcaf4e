//! Triangle meshes, the OBJ loader and the conversion of a layout into
//! renderable geometry.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ClassId, ClassTaxonomy, ObjectInstance, SceneLayout};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
    classes: Vec<ClassId>,
}

impl TriMesh {
    /// Builds a mesh, dropping zero-area triangles. Fails on out-of-range indices.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>, classes: Vec<ClassId>) -> Result<Self> {
        if triangles.len() != classes.len() {
            return Err(Error::Geometry("one class per triangle required".into()));
        }
        let n = vertices.len();
        let mut kept_tris = Vec::with_capacity(triangles.len());
        let mut kept_classes = Vec::with_capacity(classes.len());
        for (tri, class) in triangles.into_iter().zip(classes) {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(Error::Geometry(format!("triangle index out of range in {tri:?}")));
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            if (b - a).cross(&(c - a)).norm_squared() > 0.0 {
                kept_tris.push(tri);
                kept_classes.push(class);
            }
        }
        Ok(Self {
            vertices,
            triangles: kept_tris,
            classes: kept_classes,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Point3<f64>; 3] {
        self.triangles[i].map(|v| self.vertices[v as usize])
    }

    /// Axis-aligned box centred at the origin.
    pub fn cuboid(half_extents: Vector3<f64>, class: ClassId) -> Self {
        let (x, y, z) = (half_extents.x, half_extents.y, half_extents.z);
        let vertices = (0..8)
            .map(|i| {
                Point3::new(
                    if i & 1 == 0 { -x } else { x },
                    if i & 2 == 0 { -y } else { y },
                    if i & 4 == 0 { -z } else { z },
                )
            })
            .collect();
        let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
        let triangles: Vec<[u32; 3]> = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        let classes = vec![class; triangles.len()];
        Self {
            vertices,
            triangles,
            classes,
        }
    }

    /// Planar quad from four corners given in order around its boundary.
    pub fn quad(corners: [Point3<f64>; 4], class: ClassId) -> Self {
        Self {
            vertices: corners.to_vec(),
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            classes: vec![class; 2],
        }
    }

    pub fn transformed(&self, rotation: &Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| rotation * p + translation).collect(),
            triangles: self.triangles.clone(),
            classes: self.classes.clone(),
        }
    }

    pub fn append(&mut self, other: &TriMesh) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + offset)));
        self.classes.extend_from_slice(&other.classes);
    }

    /// Minimum and maximum corners of the vertex bounding box.
    pub fn bounds(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        }))
    }
}

/// Sidecar manifest mapping OBJ group/object names to class names.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ObjManifest {
    pub groups: BTreeMap<String, String>,
    /// Class for faces whose group is not listed.
    #[serde(default)]
    pub default: Option<String>,
}

fn parse_index(token: &str, vertex_count: usize, line: usize) -> Result<u32> {
    let head = token.split('/').next().unwrap_or("");
    let raw: i64 = head.parse().map_err(|_| Error::Obj {
        line,
        message: format!("bad face index `{token}`"),
    })?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        vertex_count as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= vertex_count {
        return Err(Error::Obj {
            line,
            message: format!("face index {raw} out of range"),
        });
    }
    Ok(idx as u32)
}

/// Reads `v` and `f` records from an OBJ stream. Polygons are split into
/// triangle fans; `g`/`o` names are resolved to classes via `manifest`.
pub fn load_obj<R: BufRead>(reader: R, manifest: &ObjManifest, taxonomy: &ClassTaxonomy) -> Result<TriMesh> {
    let resolve = |name: &str, line: usize| -> Result<ClassId> {
        let class_name = manifest
            .groups
            .get(name)
            .or(manifest.default.as_ref())
            .ok_or_else(|| Error::Obj {
                line,
                message: format!("group `{name}` has no class in manifest"),
            })?;
        taxonomy.id(class_name).ok_or_else(|| Error::Obj {
            line,
            message: format!("unknown class `{class_name}`"),
        })
    };

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut classes = Vec::new();
    let mut current: Option<ClassId> = None;
    let mut current_name = String::from("default");

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Obj {
                        line: line_no,
                        message: "bad vertex".into(),
                    })?;
                if coords.len() != 3 {
                    return Err(Error::Obj {
                        line: line_no,
                        message: "vertex needs three coordinates".into(),
                    });
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = tokens
                    .map(|t| parse_index(t, vertices.len(), line_no))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::Obj {
                        line: line_no,
                        message: "face needs at least three vertices".into(),
                    });
                }
                let class = match current {
                    Some(c) => c,
                    None => {
                        let c = resolve(&current_name, line_no)?;
                        current = Some(c);
                        c
                    }
                };
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                    classes.push(class);
                }
            }
            Some("g") | Some("o") => {
                current_name = tokens.collect::<Vec<_>>().join(" ");
                current = None;
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles, classes)
}

/// Meshes keyed by the reference stored in [`ObjectInstance::mesh`]. Meshes
/// are expressed in the object frame with the floor contact at z = 0.
pub type MeshLibrary = HashMap<String, TriMesh>;

/// Floor, ceiling and four walls of the room.
pub fn room_mesh(layout: &SceneLayout, taxonomy: &ClassTaxonomy) -> Result<TriMesh> {
    let class = |name: &str| {
        taxonomy
            .id(name)
            .ok_or_else(|| Error::Taxonomy(format!("taxonomy lacks structural class `{name}`")))
    };
    let (wall, floor, ceiling) = (class("wall")?, class("floor")?, class("ceiling")?);
    let (w, d, h) = (layout.room.width(), layout.room.depth(), layout.room.wall_height());
    let p = Point3::new;
    let mut mesh = TriMesh::quad([p(0.0, 0.0, 0.0), p(w, 0.0, 0.0), p(w, d, 0.0), p(0.0, d, 0.0)], floor);
    mesh.append(&TriMesh::quad([p(0.0, 0.0, h), p(0.0, d, h), p(w, d, h), p(w, 0.0, h)], ceiling));
    mesh.append(&TriMesh::quad([p(0.0, 0.0, 0.0), p(0.0, d, 0.0), p(0.0, d, h), p(0.0, 0.0, h)], wall));
    mesh.append(&TriMesh::quad([p(w, 0.0, 0.0), p(w, 0.0, h), p(w, d, h), p(w, d, 0.0)], wall));
    mesh.append(&TriMesh::quad([p(0.0, 0.0, 0.0), p(0.0, 0.0, h), p(w, 0.0, h), p(w, 0.0, 0.0)], wall));
    mesh.append(&TriMesh::quad([p(0.0, d, 0.0), p(w, d, 0.0), p(w, d, h), p(0.0, d, h)], wall));
    Ok(mesh)
}

/// Object geometry in room coordinates: the referenced mesh if any, else its box.
pub fn object_mesh(obj: &ObjectInstance, library: &MeshLibrary) -> Result<TriMesh> {
    let rotation = Rotation3::from_axis_angle(&Vector3::z_axis(), obj.pose.yaw());
    let pos = obj.pose.position();
    match &obj.mesh {
        Some(key) => {
            let mesh = library
                .get(key)
                .ok_or_else(|| Error::Geometry(format!("mesh `{key}` for object {} not loaded", obj.id)))?;
            Ok(mesh.transformed(&rotation, Vector3::new(pos.x, pos.y, obj.base_height)))
        }
        None => {
            let center = Vector3::new(pos.x, pos.y, obj.base_height + obj.half_extents.z);
            Ok(TriMesh::cuboid(obj.half_extents, obj.class).transformed(&rotation, center))
        }
    }
}

/// Room shell followed by each object, in layout order.
pub fn scene_meshes(layout: &SceneLayout, taxonomy: &ClassTaxonomy, library: &MeshLibrary) -> Result<Vec<TriMesh>> {
    let mut meshes = vec![room_mesh(layout, taxonomy)?];
    for obj in &layout.objects {
        meshes.push(object_mesh(obj, library)?);
    }
    Ok(meshes)
}
