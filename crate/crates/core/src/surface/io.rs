//! JSON mesh documents.
//!
//! ```json
//! { "vertices": 4, "genus": 1,
//!   "faces": [[0, 1, 3], ...],
//!   "crossings": { "5": "a", "17": "B" } }
//! ```
//! Halfedge `3f + k` runs from corner k to corner k+1 of face f. Halfedges not
//! listed under `crossings` carry the empty word. Twins are recovered from the
//! faces and labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{validate, LabeledMesh, Word};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshDocument {
    pub vertices: usize,
    pub faces: Vec<[usize; 3]>,
    #[serde(default)]
    pub crossings: BTreeMap<usize, Word>,
    pub genus: usize,
}

impl MeshDocument {
    pub fn from_mesh(lm: &LabeledMesh) -> Self {
        let crossings = lm
            .labels
            .words
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_empty())
            .map(|(h, w)| (h, w.clone()))
            .collect();
        MeshDocument {
            vertices: lm.mesh.num_vertices,
            faces: lm.mesh.faces.clone(),
            crossings,
            genus: lm.mesh.genus,
        }
    }

    pub fn into_mesh(self) -> Result<LabeledMesh> {
        let nh = 3 * self.faces.len();
        let mut words = vec![Word::empty(); nh];
        for (h, w) in self.crossings {
            if h >= nh {
                return Err(Error::InvalidMesh(format!("crossing on missing halfedge {h}")));
            }
            words[h] = w;
        }
        let lm = LabeledMesh::from_faces_and_labels(self.vertices, self.genus, self.faces, words.clone())?;
        // the loader does not repair labels: twins must already carry inverse words
        if lm.labels.words != words {
            return Err(Error::InvalidMesh("twin labels are not exact inverse words".into()));
        }
        validate(&lm)?;
        Ok(lm)
    }
}

pub fn parse_mesh(text: &str) -> Result<LabeledMesh> {
    let doc: MeshDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    doc.into_mesh()
}

pub fn mesh_to_string(lm: &LabeledMesh) -> String {
    serde_json::to_string_pretty(&MeshDocument::from_mesh(lm)).expect("mesh serializes")
}
