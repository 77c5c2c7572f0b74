//! Conforming triangulations of polygonal domains.
//!
//! Elements are stored counterclockwise. Faces (edges in 2D) are built on
//! demand, ordered by their sorted vertex pair; the `+` side of an interior
//! face is the element with the lower index, and the face normal `n⁺` points
//! out of that element. Face parametrization always runs from the lower to
//! the higher vertex index.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::{cross2, norm2, sub2, Real, Vec2};

/// Spatial dimension of every mesh in this crate.
pub const DIM: usize = 2;

/// Number of faces of a simplex in [`DIM`] dimensions.
pub const FACES_PER_ELEMENT: usize = DIM + 1;

/// Local edge `i` joins local vertices `i` and `(i + 1) % 3`.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

#[derive(Clone, Debug)]
pub struct Mesh<T = f64> {
    vertices: Vec<Vec2<T>>,
    elements: Vec<[usize; 3]>,
    material_tags: Vec<usize>,
}

/// Generators for the meshes used by the verification studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinMesh {
    /// `2n²` right triangles on [0,1]², each cell cut along its
    /// lower-left to upper-right diagonal.
    UnitSquare(usize),
    /// (−1,1)² minus [0,1)×(−1,0], cell size `1/n`, same diagonal split.
    LShape(usize),
}

pub fn builtin_mesh<T: Real>(kind: BuiltinMesh) -> Result<Mesh<T>> {
    match kind {
        BuiltinMesh::UnitSquare(n) => unit_square(n),
        BuiltinMesh::LShape(n) => lshape(n),
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("mesh resolution n must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn unit_square<T: Real>(n: usize) -> Result<Mesh<T>> {
    check_resolution(n)?;
    let nf = T::from_usize_lossy(n);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([T::from_usize_lossy(i) / nf, T::from_usize_lossy(j) / nf]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push([v00, v10, v11]);
            elements.push([v00, v11, v01]);
        }
    }
    let tags = vec![0; elements.len()];
    Mesh::new(vertices, elements, tags)
}

fn lshape<T: Real>(n: usize) -> Result<Mesh<T>> {
    check_resolution(n)?;
    let cells = 2 * n;
    let removed = |i: usize, j: usize| i >= n && j < n;
    let mut index = BTreeMap::new();
    let mut vertices = Vec::new();
    let nf = T::from_usize_lossy(n);
    let mut vertex = |i: usize, j: usize, vertices: &mut Vec<Vec2<T>>| -> usize {
        *index.entry((j, i)).or_insert_with(|| {
            vertices.push([
                T::from_usize_lossy(i) / nf - T::one(),
                T::from_usize_lossy(j) / nf - T::one(),
            ]);
            vertices.len() - 1
        })
    };
    let mut elements = Vec::new();
    for j in 0..cells {
        for i in 0..cells {
            if removed(i, j) {
                continue;
            }
            let v00 = vertex(i, j, &mut vertices);
            let v10 = vertex(i + 1, j, &mut vertices);
            let v11 = vertex(i + 1, j + 1, &mut vertices);
            let v01 = vertex(i, j + 1, &mut vertices);
            elements.push([v00, v10, v11]);
            elements.push([v00, v11, v01]);
        }
    }
    let tags = vec![0; elements.len()];
    Mesh::new(vertices, elements, tags)
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh and validates orientation and edge manifoldness.
    pub fn new(vertices: Vec<Vec2<T>>, elements: Vec<[usize; 3]>, material_tags: Vec<usize>) -> Result<Self> {
        let lines: Vec<usize> = (0..elements.len()).map(|_| 0).collect();
        Self::new_with_lines(vertices, elements, material_tags, &lines)
    }

    fn new_with_lines(
        vertices: Vec<Vec2<T>>,
        elements: Vec<[usize; 3]>,
        material_tags: Vec<usize>,
        lines: &[usize],
    ) -> Result<Self> {
        if material_tags.len() != elements.len() {
            return Err(Error::InvalidParameter(format!(
                "{} material tags for {} elements",
                material_tags.len(),
                elements.len()
            )));
        }
        let mesh = Mesh {
            vertices,
            elements,
            material_tags,
        };
        for (k, el) in mesh.elements.iter().enumerate() {
            let fail = |message: String| Error::Validation {
                element: k,
                line: lines[k],
                message,
            };
            if let Some(&v) = el.iter().find(|&&v| v >= mesh.vertices.len()) {
                return Err(fail(format!("vertex index {v} out of range")));
            }
            if el[0] == el[1] || el[1] == el[2] || el[0] == el[2] {
                return Err(fail("repeated vertex".into()));
            }
            if mesh.signed_area(k) <= T::zero() {
                return Err(fail("negative area (element must be counterclockwise)".into()));
            }
        }
        // Each directed edge may appear once; an undirected edge at most twice.
        let mut directed = BTreeMap::new();
        for (k, el) in mesh.elements.iter().enumerate() {
            for [a, b] in LOCAL_EDGES {
                if let Some(other) = directed.insert((el[a], el[b]), k) {
                    return Err(Error::Validation {
                        element: k,
                        line: lines[k],
                        message: format!(
                            "non-manifold edge ({}, {}) also traversed in the same direction by element {other}",
                            el[a], el[b]
                        ),
                    });
                }
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn material_tags(&self) -> &[usize] {
        &self.material_tags
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn dimension(&self) -> usize {
        DIM
    }

    pub fn element_vertices(&self, k: usize) -> [Vec2<T>; 3] {
        let e = self.elements[k];
        [self.vertices[e[0]], self.vertices[e[1]], self.vertices[e[2]]]
    }

    pub fn signed_area(&self, k: usize) -> T {
        let [a, b, c] = self.element_vertices(k);
        cross2(sub2(b, a), sub2(c, a)) * T::lit(0.5)
    }

    pub fn total_area(&self) -> T {
        (0..self.num_elements()).map(|k| self.signed_area(k)).sum()
    }

    /// Element diameter `h_K` (longest edge).
    pub fn diameter(&self, k: usize) -> T {
        let v = self.element_vertices(k);
        LOCAL_EDGES
            .iter()
            .map(|&[a, b]| norm2(sub2(v[b], v[a])))
            .fold(T::zero(), |m, x| m.max(x))
    }

    /// Inradius `ρ_K = 2|K| / perimeter`.
    pub fn inradius(&self, k: usize) -> T {
        let v = self.element_vertices(k);
        let perimeter: T = LOCAL_EDGES.iter().map(|&[a, b]| norm2(sub2(v[b], v[a]))).sum();
        T::lit(2.0) * self.signed_area(k) / perimeter
    }

    /// Mesh size `h = max_K h_K`.
    pub fn h_max(&self) -> T {
        (0..self.num_elements())
            .map(|k| self.diameter(k))
            .fold(T::zero(), |m, x| m.max(x))
    }

    /// Largest `h_K / ρ_K` over the mesh.
    pub fn shape_regularity(&self) -> T {
        (0..self.num_elements())
            .map(|k| self.diameter(k) / self.inradius(k))
            .fold(T::zero(), |m, x| m.max(x))
    }

    pub fn centroid(&self, k: usize) -> Vec2<T> {
        let [a, b, c] = self.element_vertices(k);
        let third = T::one() / T::lit(3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    pub fn affine_map(&self, k: usize) -> AffineMap<T> {
        AffineMap::new(self.element_vertices(k))
    }

    /// Builds the face topology.
    pub fn build_faces(&self) -> Result<FaceSet<T>> {
        FaceSet::build(self)
    }

    /// Red refinement: every triangle is split into four congruent children
    /// through its edge midpoints. Children of element `k` are `4k..4k+4` and
    /// inherit its material tag.
    pub fn refine_uniform(&self) -> Result<Mesh<T>> {
        let faces = self.build_faces()?;
        let nv = self.num_vertices();
        let half = T::lit(0.5);
        let mut vertices = self.vertices.clone();
        for f in faces.faces() {
            let a = self.vertices[f.vertices[0]];
            let b = self.vertices[f.vertices[1]];
            vertices.push([(a[0] + b[0]) * half, (a[1] + b[1]) * half]);
        }
        let mut elements = Vec::with_capacity(4 * self.num_elements());
        let mut tags = Vec::with_capacity(4 * self.num_elements());
        for (k, el) in self.elements.iter().enumerate() {
            let ef = faces.element_faces(k);
            // Midpoint of local edge i, which joins local vertices i and i+1.
            let m = [nv + ef[0], nv + ef[1], nv + ef[2]];
            elements.push([el[0], m[0], m[2]]);
            elements.push([m[0], el[1], m[1]]);
            elements.push([m[2], m[1], el[2]]);
            elements.push([m[0], m[1], m[2]]);
            tags.extend([self.material_tags[k]; 4]);
        }
        Mesh::new(vertices, elements, tags)
    }

    /// Vertex patch `D_K`: every element sharing at least one vertex with `K`.
    pub fn macro_element(&self, k: usize) -> Result<MacroElement> {
        if k >= self.num_elements() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.num_elements(),
            });
        }
        let mut touching = vec![Vec::new(); self.num_vertices()];
        for (e, el) in self.elements.iter().enumerate() {
            for &v in el {
                touching[v].push(e);
            }
        }
        let neighbors: BTreeSet<usize> = self.elements[k]
            .iter()
            .flat_map(|&v| touching[v].iter().copied())
            .collect();
        Ok(MacroElement {
            element: k,
            neighbors: neighbors.into_iter().collect(),
        })
    }

    /// Returns a copy with elements listed in the order `order[new] = old`.
    pub fn permute_elements(&self, order: &[usize]) -> Result<Mesh<T>> {
        let elements = order.iter().map(|&o| self.elements[o]).collect();
        let tags = order.iter().map(|&o| self.material_tags[o]).collect();
        Mesh::new(self.vertices.clone(), elements, tags)
    }

    pub fn with_material_tags(mut self, tags: Vec<usize>) -> Result<Self> {
        if tags.len() != self.elements.len() {
            return Err(Error::InvalidParameter("material tag count mismatch".into()));
        }
        self.material_tags = tags;
        Ok(self)
    }

    /// Writes the mesh in the ASCII exchange format read by [`load_mesh`].
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "nodes {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0].as_f64(), v[1].as_f64())?;
        }
        writeln!(out, "elements {}", self.elements.len())?;
        for (e, t) in self.elements.iter().zip(&self.material_tags) {
            writeln!(out, "{} {} {} {}", e[0], e[1], e[2], t)?;
        }
        Ok(())
    }
}

/// Reads a mesh from the ASCII exchange format:
///
/// ```text
/// nodes N
/// x y          (N lines)
/// elements M
/// i j k [tag]  (M lines, 0-based, tag defaults to 0)
/// ```
///
/// Blank lines and `#` comments are ignored.
pub fn load_mesh<T: Real, R: BufRead>(input: R) -> Result<Mesh<T>> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim().to_string();
        if !content.is_empty() {
            lines.push((i + 1, content));
        }
    }
    let mut it = lines.into_iter();
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let header = |keyword: &str, it: &mut std::vec::IntoIter<(usize, String)>| -> Result<usize> {
        let (ln, text) = it
            .next()
            .ok_or_else(|| parse_err(0, format!("missing `{keyword}` header")))?;
        let mut toks = text.split_whitespace();
        if toks.next() != Some(keyword) {
            return Err(parse_err(ln, format!("expected `{keyword} <count>`")));
        }
        let count = toks
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| parse_err(ln, format!("expected `{keyword} <count>`")))?;
        if toks.next().is_some() {
            return Err(parse_err(ln, "trailing tokens after count".into()));
        }
        Ok(count)
    };

    let n_nodes = header("nodes", &mut it)?;
    let mut vertices = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, text) = it
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in nodes".into()))?;
        let vals: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad coordinate: {e}")))?;
        if vals.len() != 2 {
            return Err(parse_err(ln, format!("expected 2 coordinates, found {}", vals.len())));
        }
        vertices.push([T::lit(vals[0]), T::lit(vals[1])]);
    }

    let n_elements = header("elements", &mut it)?;
    let mut elements = Vec::with_capacity(n_elements);
    let mut tags = Vec::with_capacity(n_elements);
    let mut element_lines = Vec::with_capacity(n_elements);
    for _ in 0..n_elements {
        let (ln, text) = it
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in elements".into()))?;
        let vals: Vec<usize> = text
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad index: {e}")))?;
        if vals.len() != 3 && vals.len() != 4 {
            return Err(parse_err(
                ln,
                format!("expected `i j k [tag]`, found {} fields", vals.len()),
            ));
        }
        elements.push([vals[0], vals[1], vals[2]]);
        tags.push(vals.get(3).copied().unwrap_or(0));
        element_lines.push(ln);
    }
    if let Some((ln, _)) = it.next() {
        return Err(parse_err(ln, "unexpected content after elements".into()));
    }
    Mesh::new_with_lines(vertices, elements, tags, &element_lines)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary,
}

#[derive(Clone, Debug)]
pub struct Face<T = f64> {
    /// Vertex indices, lower first. The face is parametrized from
    /// `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    /// `K⁺`: the lower-indexed adjacent element.
    pub plus: usize,
    /// `K⁻` for interior faces.
    pub minus: Option<usize>,
    /// Local edge index of this face within `K⁺` and `K⁻`.
    pub local_plus: usize,
    pub local_minus: Option<usize>,
    /// Unit normal pointing out of `K⁺`.
    pub normal: Vec2<T>,
    /// Face diameter `h_F`.
    pub diameter: T,
}

impl<T: Real> Face<T> {
    pub fn kind(&self) -> FaceKind {
        if self.minus.is_some() {
            FaceKind::Interior
        } else {
            FaceKind::Boundary
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    /// Elements of `ω_F` in the order `[K⁺, K⁻]`.
    pub fn support(&self) -> Vec<usize> {
        let mut s = vec![self.plus];
        s.extend(self.minus);
        s
    }

    /// Weight of the average `{{·}}`: ½ on interior faces, 1 on the boundary.
    pub fn average_weight(&self) -> T {
        if self.is_boundary() {
            T::one()
        } else {
            T::lit(0.5)
        }
    }

    /// Sign with which element `k`'s trace enters a jump: +1 on `K⁺`, −1 on `K⁻`.
    pub fn side_sign(&self, k: usize) -> T {
        if k == self.plus {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Unit tangent from the lower to the higher vertex.
    pub fn tangent(&self, mesh: &Mesh<T>) -> Vec2<T> {
        let d = sub2(mesh.vertices[self.vertices[1]], mesh.vertices[self.vertices[0]]);
        [d[0] / self.diameter, d[1] / self.diameter]
    }

    /// Point at parameter `s ∈ [0, 1]`.
    pub fn point(&self, mesh: &Mesh<T>, s: T) -> Vec2<T> {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }
}

/// Face topology of a [`Mesh`].
#[derive(Clone, Debug)]
pub struct FaceSet<T = f64> {
    faces: Vec<Face<T>>,
    element_faces: Vec<[usize; 3]>,
    num_boundary: usize,
}

impl<T: Real> FaceSet<T> {
    fn build(mesh: &Mesh<T>) -> Result<Self> {
        // (lo, hi) -> [(element, local edge)]
        let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (k, el) in mesh.elements.iter().enumerate() {
            for (local, &[a, b]) in LOCAL_EDGES.iter().enumerate() {
                let key = (el[a].min(el[b]), el[a].max(el[b]));
                edges.entry(key).or_default().push((k, local));
            }
        }
        let mut faces = Vec::with_capacity(edges.len());
        let mut element_faces = vec![[usize::MAX; 3]; mesh.num_elements()];
        let mut num_boundary = 0;
        for ((lo, hi), mut adj) in edges {
            if adj.len() > 2 {
                return Err(Error::Topology(format!(
                    "edge ({lo}, {hi}) is shared by {} elements",
                    adj.len()
                )));
            }
            adj.sort_unstable();
            let (plus, local_plus) = adj[0];
            let (minus, local_minus) = match adj.get(1) {
                Some(&(m, l)) => (Some(m), Some(l)),
                None => {
                    num_boundary += 1;
                    (None, None)
                }
            };
            // Outward normal of K⁺ on its local edge a→b (counterclockwise).
            let el = mesh.elements[plus];
            let [la, lb] = LOCAL_EDGES[local_plus];
            let d = sub2(mesh.vertices[el[lb]], mesh.vertices[el[la]]);
            let len = norm2(d);
            let face = Face {
                vertices: [lo, hi],
                plus,
                minus,
                local_plus,
                local_minus,
                normal: [d[1] / len, -d[0] / len],
                diameter: len,
            };
            let idx = faces.len();
            element_faces[plus][local_plus] = idx;
            if let (Some(m), Some(l)) = (minus, local_minus) {
                element_faces[m][l] = idx;
            }
            faces.push(face);
        }
        Ok(FaceSet {
            faces,
            element_faces,
            num_boundary,
        })
    }

    pub fn faces(&self) -> &[Face<T>] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face<T> {
        &self.faces[f]
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn num_boundary(&self) -> usize {
        self.num_boundary
    }

    pub fn num_interior(&self) -> usize {
        self.faces.len() - self.num_boundary
    }

    /// Global face indices of local edges `0, 1, 2` of element `k`.
    pub fn element_faces(&self, k: usize) -> [usize; 3] {
        self.element_faces[k]
    }
}

/// Vertex patch of an element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroElement {
    pub element: usize,
    /// Sorted indices of all elements sharing a vertex with `element`,
    /// including `element` itself.
    pub neighbors: Vec<usize>,
}

/// Affine map `x = x₀ + J x̂` from the reference triangle.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap<T> {
    pub origin: Vec2<T>,
    /// Jacobian, row-major: `jac[i][j] = ∂xᵢ/∂x̂ⱼ`.
    pub jac: [[T; 2]; 2],
    pub det: T,
    /// `J⁻ᵀ`, row-major.
    pub inv_t: [[T; 2]; 2],
}

impl<T: Real> AffineMap<T> {
    pub fn new(v: [Vec2<T>; 3]) -> Self {
        let jac = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // J⁻¹ = [[d, -b], [-c, a]] / det; J⁻ᵀ = [[d, -c], [-b, a]] / det.
        let inv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        AffineMap {
            origin: v[0],
            jac,
            det,
            inv_t,
        }
    }

    pub fn to_physical(&self, xr: Vec2<T>) -> Vec2<T> {
        [
            self.origin[0] + self.jac[0][0] * xr[0] + self.jac[0][1] * xr[1],
            self.origin[1] + self.jac[1][0] * xr[0] + self.jac[1][1] * xr[1],
        ]
    }

    pub fn to_reference(&self, x: Vec2<T>) -> Vec2<T> {
        let d = sub2(x, self.origin);
        // x̂ = J⁻¹ d, and J⁻¹ = (J⁻ᵀ)ᵀ.
        [
            self.inv_t[0][0] * d[0] + self.inv_t[1][0] * d[1],
            self.inv_t[0][1] * d[0] + self.inv_t[1][1] * d[1],
        ]
    }

    /// Covariant Piola transform `J⁻ᵀ v̂`.
    pub fn covariant(&self, v: Vec2<T>) -> Vec2<T> {
        [
            self.inv_t[0][0] * v[0] + self.inv_t[0][1] * v[1],
            self.inv_t[1][0] * v[0] + self.inv_t[1][1] * v[1],
        ]
    }
}
