//! Closed oriented triangulated surfaces with deck-transformation labels.
//!
//! Halfedge `3f + k` runs from corner `k` to corner `k + 1` of face `f`, so
//! `next` and `face` are implicit. A crossing label on halfedge `i -> j` is the
//! group element `g` such that, seen from the base lift of `i`, the far endpoint
//! is the lift `g · base(j)`.

pub mod io;
pub mod octagon;
pub mod word;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use word::{Letter, SurfaceGroup, Word};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfEdgeMesh {
    pub num_vertices: usize,
    pub faces: Vec<[usize; 3]>,
    pub twin: Vec<usize>,
    pub genus: usize,
}

impl HalfEdgeMesh {
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_halfedges(&self) -> usize {
        3 * self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_halfedges() / 2
    }

    #[inline]
    pub fn origin(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    #[inline]
    pub fn dest(&self, h: usize) -> usize {
        self.faces[h / 3][(h + 1) % 3]
    }

    #[inline]
    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 1) % 3
    }

    #[inline]
    pub fn face(&self, h: usize) -> usize {
        h / 3
    }

    /// Corner opposite to halfedge `h` within its face.
    #[inline]
    pub fn opposite_corner(h: usize) -> usize {
        (h % 3 + 2) % 3
    }

    pub fn is_primary(&self, h: usize) -> bool {
        h < self.twin[h]
    }

    /// One halfedge per edge, in increasing order.
    pub fn primary_halfedges(&self) -> Vec<usize> {
        (0..self.num_halfedges()).filter(|&h| self.is_primary(h)).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - (self.num_halfedges() as i64) / 2 + self.num_faces() as i64
    }
}

/// Per-halfedge generator words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingLabel {
    pub words: Vec<Word>,
}

impl CrossingLabel {
    pub fn get(&self, h: usize) -> &Word {
        &self.words[h]
    }

    /// Product of the labels around face `f`.
    pub fn face_word(&self, f: usize) -> Word {
        self.words[3 * f].mul(&self.words[3 * f + 1]).mul(&self.words[3 * f + 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMesh {
    pub mesh: HalfEdgeMesh,
    pub labels: CrossingLabel,
}

impl LabeledMesh {
    pub fn group(&self) -> SurfaceGroup {
        SurfaceGroup { genus: self.mesh.genus }
    }

    /// Builds twins and labels from faces with per-corner lift words: corner `k`
    /// of face `f` is seen at `lifts[f][k] · base(v)`. Twins are matched by
    /// endpoints and group equality; secondary labels are then rewritten as the
    /// exact inverse of their primary label.
    pub fn from_lifted_faces(
        num_vertices: usize,
        genus: usize,
        faces: Vec<[usize; 3]>,
        lifts: &[[Word; 3]],
    ) -> Result<LabeledMesh> {
        let mut words = Vec::with_capacity(3 * faces.len());
        for l in lifts {
            for k in 0..3 {
                words.push(l[k].inverse().mul(&l[(k + 1) % 3]));
            }
        }
        Self::from_faces_and_labels(num_vertices, genus, faces, words)
    }

    pub fn from_faces_and_labels(
        num_vertices: usize,
        genus: usize,
        faces: Vec<[usize; 3]>,
        mut words: Vec<Word>,
    ) -> Result<LabeledMesh> {
        let group = SurfaceGroup::new(genus)?;
        if words.len() != 3 * faces.len() {
            return Err(Error::InvalidMesh("label count differs from halfedge count".into()));
        }
        for (f, t) in faces.iter().enumerate() {
            for &v in t {
                if v >= num_vertices {
                    return Err(Error::InvalidMesh(format!("face {f} references vertex {v}")));
                }
            }
        }
        let nh = 3 * faces.len();
        let origin = |h: usize| faces[h / 3][h % 3];
        let dest = |h: usize| faces[h / 3][(h + 1) % 3];
        let mut buckets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for h in 0..nh {
            let (a, b) = (origin(h), dest(h));
            buckets.entry((a.min(b), a.max(b))).or_default().push(h);
        }
        let mut twin = vec![usize::MAX; nh];
        for h in 0..nh {
            if twin[h] != usize::MAX {
                continue;
            }
            let (a, b) = (origin(h), dest(h));
            let cand = &buckets[&(a.min(b), a.max(b))];
            let mut found = None;
            for &k in cand {
                if k != h
                    && twin[k] == usize::MAX
                    && origin(k) == b
                    && dest(k) == a
                    && group.is_identity(&words[h].mul(&words[k]))
                {
                    found = Some(k);
                    break;
                }
            }
            match found {
                Some(k) => {
                    twin[h] = k;
                    twin[k] = h;
                }
                None => {
                    let same_dir = cand.iter().any(|&k| {
                        k != h && origin(k) == a && dest(k) == b && group.equal(&words[k], &words[h])
                    });
                    return Err(Error::InvalidMesh(if same_dir {
                        format!("inconsistent orientation at halfedge {h} ({a} -> {b})")
                    } else {
                        format!("halfedge {h} ({a} -> {b}) has no twin")
                    }));
                }
            }
        }
        for h in 0..nh {
            if h < twin[h] {
                words[twin[h]] = words[h].inverse();
            }
        }
        let lm = LabeledMesh {
            mesh: HalfEdgeMesh { num_vertices, faces, twin, genus },
            labels: CrossingLabel { words },
        };
        validate(&lm)?;
        Ok(lm)
    }
}

/// Checks every structural invariant of a labeled mesh.
pub fn validate(lm: &LabeledMesh) -> Result<()> {
    let m = &lm.mesh;
    let group = SurfaceGroup::new(m.genus)?;
    let nh = m.num_halfedges();
    if m.twin.len() != nh || lm.labels.words.len() != nh {
        return Err(Error::InvalidMesh("array lengths disagree with face count".into()));
    }
    for (f, t) in m.faces.iter().enumerate() {
        if t.iter().any(|&v| v >= m.num_vertices) {
            return Err(Error::InvalidMesh(format!("face {f} references a missing vertex")));
        }
    }
    for h in 0..nh {
        let t = m.twin[h];
        if t >= nh || t == h || m.twin[t] != h {
            return Err(Error::InvalidMesh(format!("twin is not a fixed-point-free involution at {h}")));
        }
        if m.origin(t) != m.dest(h) || m.dest(t) != m.origin(h) {
            return Err(Error::InvalidMesh(format!("inconsistent orientation at halfedge {h}")));
        }
        if lm.labels.words[t] != lm.labels.words[h].inverse() {
            return Err(Error::InvalidMesh(format!("label of twin of {h} is not the inverse word")));
        }
    }
    let mut seen = vec![false; m.num_vertices];
    for t in &m.faces {
        for &v in t {
            seen[v] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidMesh("isolated vertex".into()));
    }
    let chi = m.euler_characteristic();
    if chi != 2 - 2 * m.genus as i64 {
        return Err(Error::InvalidMesh(format!("Euler characteristic {chi} does not match genus {}", m.genus)));
    }
    for f in 0..m.num_faces() {
        let w = lm.labels.face_word(f);
        if !group.is_identity(&w) {
            return Err(Error::InvalidMesh(format!("face {f} word {w} is not trivial")));
        }
    }
    Ok(())
}

/// Flat torus grid with `2 n^2` triangles. Vertex `(i, j)` has id `i + n j`;
/// each grid square is cut along its (i, j) - (i+1, j+1) diagonal.
pub fn build_torus(n: usize) -> Result<LabeledMesh> {
    if n < 2 {
        return Err(Error::Invalid(format!("torus resolution {n} < 2")));
    }
    let id = |i: usize, j: usize| (i % n) + n * (j % n);
    let lift = |i: usize, j: usize| {
        let mut w = Vec::new();
        if i == n {
            w.push(1);
        }
        if j == n {
            w.push(2);
        }
        Word(w)
    };
    let mut faces = Vec::with_capacity(2 * n * n);
    let mut lifts = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let corners = [[(i, j), (i + 1, j), (i + 1, j + 1)], [(i, j), (i + 1, j + 1), (i, j + 1)]];
            for c in corners {
                faces.push([id(c[0].0, c[0].1), id(c[1].0, c[1].1), id(c[2].0, c[2].1)]);
                lifts.push([lift(c[0].0, c[0].1), lift(c[1].0, c[1].1), lift(c[2].0, c[2].1)]);
            }
        }
    }
    LabeledMesh::from_lifted_faces(n * n, 1, faces, &lifts)
}

/// The eight-triangle fan of the octagon: vertex 0 is the center, vertex 1 the
/// single corner class (base lift at corner 0).
pub fn octagon_fan() -> Result<LabeledMesh> {
    let h = octagon::corner_lifts();
    let mut faces = Vec::with_capacity(8);
    let mut lifts = Vec::with_capacity(8);
    for k in 0..8 {
        faces.push([0, 1, 1]);
        lifts.push([Word::empty(), h[k].clone(), h[(k + 1) % 8].clone()]);
    }
    LabeledMesh::from_lifted_faces(2, 2, faces, &lifts)
}

/// Genus-2 octagon mesh. Level 0 is the fan refined once (32 faces); each level
/// quadruples the face count.
pub fn build_genus2_octagon(levels: usize) -> Result<LabeledMesh> {
    let mut m = octagon_fan()?;
    for _ in 0..=levels {
        m = refine(&m).child;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexOrigin {
    Old(usize),
    /// Midpoint of the edge of this primary halfedge, in the frame of its origin.
    Midpoint(usize),
}

#[derive(Debug, Clone)]
pub struct RefinementMap {
    pub parent: LabeledMesh,
    pub child: LabeledMesh,
    pub provenance: Vec<VertexOrigin>,
}

/// 1 -> 4 split. Child face `4f + k`: corner triangles at corners 0, 1, 2 of the
/// parent, then the middle triangle.
pub fn refine(lm: &LabeledMesh) -> RefinementMap {
    let m = &lm.mesh;
    let nv = m.num_vertices;
    let mut edge_id = vec![usize::MAX; m.num_halfedges()];
    let mut provenance: Vec<VertexOrigin> = (0..nv).map(VertexOrigin::Old).collect();
    for h in m.primary_halfedges() {
        edge_id[h] = provenance.len();
        edge_id[m.twin[h]] = provenance.len();
        provenance.push(VertexOrigin::Midpoint(h));
    }
    let lab = |h: usize| &lm.labels.words[h];
    // labels of the two halves of halfedge h
    let halves = |h: usize| -> (Word, Word) {
        if m.is_primary(h) {
            (Word::empty(), lab(h).clone())
        } else {
            (lab(h).clone(), Word::empty())
        }
    };
    let mut faces = Vec::with_capacity(4 * m.num_faces());
    let mut words = Vec::with_capacity(12 * m.num_faces());
    for f in 0..m.num_faces() {
        let [v0, v1, v2] = m.faces[f];
        let (h0, h1, h2) = (3 * f, 3 * f + 1, 3 * f + 2);
        let (m0, m1, m2) = (edge_id[h0], edge_id[h1], edge_id[h2]);
        let (a0, b0) = halves(h0);
        let (a1, b1) = halves(h1);
        let (a2, b2) = halves(h2);
        let l_v1 = lab(h0).clone();
        let l_v2 = l_v1.mul(lab(h1));
        let l_m0 = a0.clone();
        let l_m1 = l_v1.mul(&a1);
        let l_m2 = l_v2.mul(&a2);
        let rel = |x: &Word, y: &Word| x.inverse().mul(y);
        faces.push([v0, m0, m2]);
        words.extend([a0.clone(), rel(&l_m0, &l_m2), b2.clone()]);
        faces.push([m0, v1, m1]);
        words.extend([b0.clone(), a1.clone(), rel(&l_m1, &l_m0)]);
        faces.push([m2, m1, v2]);
        words.extend([rel(&l_m2, &l_m1), b1.clone(), a2.clone()]);
        faces.push([m0, m1, m2]);
        words.extend([rel(&l_m0, &l_m1), rel(&l_m1, &l_m2), rel(&l_m2, &l_m0)]);
    }
    let nh = words.len();
    let origin = |h: usize| faces[h / 3][h % 3];
    let dest = |h: usize| faces[h / 3][(h + 1) % 3];
    let mut index: HashMap<(usize, usize, &Word), usize> = HashMap::with_capacity(nh);
    for h in 0..nh {
        index.insert((origin(h), dest(h), &words[h]), h);
    }
    let mut twin = vec![0; nh];
    for h in 0..nh {
        let inv = words[h].inverse();
        twin[h] = *index
            .get(&(dest(h), origin(h), &inv))
            .expect("refinement produced an unmatched halfedge");
    }
    let child = LabeledMesh {
        mesh: HalfEdgeMesh { num_vertices: provenance.len(), faces, twin, genus: m.genus },
        labels: CrossingLabel { words },
    };
    RefinementMap { parent: lm.clone(), child, provenance }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        let t = build_torus(2).unwrap();
        assert_eq!(t.mesh.num_vertices, 4);
        assert_eq!(t.mesh.num_edges(), 12);
        assert_eq!(t.mesh.num_faces(), 8);
        assert_eq!(t.mesh.euler_characteristic(), 0);
        assert_eq!(build_torus(4).unwrap().mesh.num_faces(), 32);
        assert!(build_torus(1).is_err());
    }

    #[test]
    fn torus_face_words_trivial() {
        for n in 2..7 {
            let t = build_torus(n).unwrap();
            let g = t.group();
            for f in 0..t.mesh.num_faces() {
                assert!(g.is_identity(&t.labels.face_word(f)));
            }
        }
    }

    #[test]
    fn octagon_levels() {
        let fan = octagon_fan().unwrap();
        assert_eq!(fan.mesh.euler_characteristic(), -2);
        let l0 = build_genus2_octagon(0).unwrap();
        let l1 = build_genus2_octagon(1).unwrap();
        assert_eq!(l0.mesh.num_faces(), 32);
        assert_eq!(l0.mesh.euler_characteristic(), -2);
        assert_eq!(l1.mesh.num_faces(), 4 * l0.mesh.num_faces());
        validate(&l1).unwrap();
    }

    #[test]
    fn identification_word_around_corner_orbit() {
        // the product of the link labels around the single corner vertex of the
        // fan is trivial in the surface group
        let fan = octagon_fan().unwrap();
        let m = &fan.mesh;
        let start = (0..m.num_halfedges()).find(|&h| m.origin(h) == 1).unwrap();
        let mut h = start;
        let mut acc = Word::empty();
        let mut steps = 0;
        loop {
            acc = acc.mul(fan.labels.get(m.next(h)));
            h = m.twin[m.next(m.next(h))];
            steps += 1;
            if h == start {
                break;
            }
        }
        assert_eq!(steps, 16);
        assert!(fan.group().is_identity(&acc));
        assert!(!acc.is_empty());
    }

    #[test]
    fn refinement_counts_and_validity() {
        let t = build_torus(2).unwrap();
        let r = refine(&t);
        assert_eq!(r.child.mesh.num_faces(), 32);
        assert_eq!(r.child.mesh.genus, 1);
        validate(&r.child).unwrap();
        let r2 = refine(&r.child);
        validate(&r2.child).unwrap();
        assert_eq!(r2.child.mesh.euler_characteristic(), 0);
    }
}
