use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_mesh, Point, PolyMesh};
use crate::error::{Result, VemError};

/// On-disk mesh: `{ "vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...] }`.
///
/// Coordinates are written as shortest round-trip decimals, so a mesh dumped
/// and reloaded is bit-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
}

impl From<&PolyMesh> for MeshFile {
    fn from(mesh: &PolyMesh) -> Self {
        MeshFile {
            vertices: mesh.vertices().iter().map(|p| [p.x, p.y]).collect(),
            cells: mesh.cells().to_vec(),
        }
    }
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<PolyMesh> {
        let vertices = self.vertices.into_iter().map(|[x, y]| Point::new(x, y)).collect();
        Ok(build_mesh(vertices, self.cells)?)
    }
}

impl PolyMesh {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeshFile::from(self)).expect("mesh serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<PolyMesh> {
        serde_json::from_str::<MeshFile>(text)?.into_mesh()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| VemError::Io { path: path.to_path_buf(), source })
    }

    pub fn read_json(path: &Path) -> Result<PolyMesh> {
        let text = std::fs::read_to_string(path).map_err(|source| VemError::Io { path: path.to_path_buf(), source })?;
        PolyMesh::from_json(&text)
    }
}
