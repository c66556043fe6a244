//! Positional encodings: spectral (LPE), label-aware (GEE/GPE), and their
//! composition E = [(M + LPE), GPE].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::catalog::SubgraphCatalog;
use crate::graph::SparseGraph;
use crate::numerics::eigen::{sym_eigs_smallest, EigenOptions};
use crate::numerics::svd::thin_svd;
use crate::numerics::{DenseMatrix, SymmetricOperator};

/// Which positional encoding feeds the model input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeMode {
    /// E = M
    Nope,
    /// E = M + LPE
    Lpe,
    /// E = [(M + LPE), GPE]
    Spe,
}

impl std::fmt::Display for PeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PeMode::Nope => write!(f, "nope"),
            PeMode::Lpe => write!(f, "lpe"),
            PeMode::Spe => write!(f, "spe"),
        }
    }
}

/// Normalized Laplacian as an apply-only operator: x -> x - D^-1/2 A D^-1/2 x.
/// Zero-degree rows use the convention D^-1/2 = 0, so isolated nodes map to
/// themselves.
pub struct NormalizedLaplacian<'g> {
    graph: &'g SparseGraph,
    inv_sqrt_deg: Vec<f64>,
}

pub fn normalized_laplacian(graph: &SparseGraph) -> NormalizedLaplacian<'_> {
    let inv_sqrt_deg = (0..graph.num_nodes())
        .map(|u| {
            let d = graph.degree(u);
            if d == 0 {
                0.0
            } else {
                1.0 / (d as f64).sqrt()
            }
        })
        .collect();
    NormalizedLaplacian {
        graph,
        inv_sqrt_deg,
    }
}

impl SymmetricOperator for NormalizedLaplacian<'_> {
    fn dim(&self) -> usize {
        self.graph.num_nodes()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for u in 0..self.graph.num_nodes() {
            let su = self.inv_sqrt_deg[u];
            let mut acc = 0.0;
            for &v in self.graph.neighbors(u) {
                acc += self.inv_sqrt_deg[v] * x[v];
            }
            y[u] = x[u] - su * acc;
        }
    }
}

/// Eigenvectors of the normalized Laplacian for the k smallest nonzero
/// eigenvalues, one column per eigenvalue, ascending.
#[derive(Clone, Debug)]
pub struct LpeMatrix {
    pub matrix: DenseMatrix,
    pub eigenvalues: Vec<f64>,
}

pub fn lpe(graph: &SparseGraph, k: usize, opts: &EigenOptions) -> Result<LpeMatrix> {
    let op = normalized_laplacian(graph);
    let pairs = sym_eigs_smallest(&op, k, opts)?;
    Ok(LpeMatrix {
        matrix: pairs.vectors,
        eigenvalues: pairs.values,
    })
}

/// Label weight matrix: W[i][j] = 1/n_j when node i belongs to subgraph j.
/// Nodes in several subgraphs get a nonzero in every containing column, so
/// every column sums to one.
pub fn build_weight_matrix(catalog: &SubgraphCatalog, num_nodes: usize) -> Result<DenseMatrix> {
    if catalog.num_nodes() != num_nodes {
        return Err(Error::Dimension(format!(
            "catalog bound to {} nodes, graph has {num_nodes}",
            catalog.num_nodes()
        )));
    }
    let k = catalog.len();
    let mut w = DenseMatrix::zeros(num_nodes, k);
    for j in 0..k {
        let members = catalog.members(j);
        let share = 1.0 / members.len() as f64;
        for &i in members {
            w.set(i, j, share);
        }
    }
    Ok(w)
}

/// Which matrix multiplies the weight matrix in the label embedding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeeVariant {
    /// Z = A W
    #[default]
    Adjacency,
    /// Z = (A + I) W
    DiagonalAugmented,
    /// Z = D^-1/2 A D^-1/2 W
    LaplacianNormalized,
}

#[derive(Clone, Debug)]
pub struct GeeMatrix {
    pub z: DenseMatrix,
}

/// Sparse-dense product of the chosen adjacency variant with W.
pub fn gee_embed(graph: &SparseGraph, w: &DenseMatrix, variant: GeeVariant) -> Result<GeeMatrix> {
    let n = graph.num_nodes();
    if w.rows() != n {
        return Err(Error::Dimension(format!(
            "weight matrix has {} rows for a {n}-node graph",
            w.rows()
        )));
    }
    let k = w.cols();
    let mut z = DenseMatrix::zeros(n, k);
    let isd: Option<Vec<f64>> = match variant {
        GeeVariant::LaplacianNormalized => Some(
            (0..n)
                .map(|u| {
                    let d = graph.degree(u);
                    if d == 0 {
                        0.0
                    } else {
                        1.0 / (d as f64).sqrt()
                    }
                })
                .collect(),
        ),
        _ => None,
    };
    for u in 0..n {
        let out = z.row_mut(u);
        for &v in graph.neighbors(u) {
            let scale = match &isd {
                Some(s) => s[u] * s[v],
                None => 1.0,
            };
            for (o, x) in out.iter_mut().zip(w.row(v)) {
                *o += scale * x;
            }
        }
        if variant == GeeVariant::DiagonalAugmented {
            for (o, x) in out.iter_mut().zip(w.row(u)) {
                *o += x;
            }
        }
    }
    Ok(GeeMatrix { z })
}

/// Leading left singular vectors of Z. Columns are unscaled by the
/// singular values unless asked; scaling exists for ablation only.
#[derive(Clone, Debug)]
pub struct GpeMatrix {
    pub matrix: DenseMatrix,
    pub singular_values: Vec<f64>,
}

pub fn gpe(z: &GeeMatrix, d: usize, scale_by_sigma: bool) -> Result<GpeMatrix> {
    let svd = thin_svd(&z.z, d)?;
    let mut matrix = svd.u;
    if scale_by_sigma {
        for c in 0..d {
            for r in 0..matrix.rows() {
                let v = matrix.get(r, c);
                matrix.set(r, c, v * svd.sigma[c]);
            }
        }
    }
    Ok(GpeMatrix {
        matrix,
        singular_values: svd.sigma,
    })
}

/// Composed model input.
#[derive(Clone, Debug)]
pub struct SpeInput {
    pub e: DenseMatrix,
}

/// E = [(M + LPE), GPE]. The elementwise sum requires dim(M) = dim(LPE).
pub fn spe_compose(m: &DenseMatrix, lpe: &LpeMatrix, gpe: &GpeMatrix) -> Result<SpeInput> {
    if m.cols() != lpe.matrix.cols() {
        return Err(Error::Dimension(format!(
            "elementwise sum needs dim(M) = dim(LPE); got {} vs {}",
            m.cols(),
            lpe.matrix.cols()
        )));
    }
    if m.rows() != lpe.matrix.rows() || m.rows() != gpe.matrix.rows() {
        return Err(Error::Dimension(format!(
            "row mismatch: M {}, LPE {}, GPE {}",
            m.rows(),
            lpe.matrix.rows(),
            gpe.matrix.rows()
        )));
    }
    let summed = m.add(&lpe.matrix)?;
    Ok(SpeInput {
        e: summed.hcat(&gpe.matrix)?,
    })
}

/// Model input for any ablation mode. LPE is required for `lpe`/`spe`,
/// GPE for `spe`.
pub fn compose_input(
    mode: PeMode,
    m: &DenseMatrix,
    lpe: Option<&LpeMatrix>,
    gpe: Option<&GpeMatrix>,
) -> Result<SpeInput> {
    match mode {
        PeMode::Nope => Ok(SpeInput { e: m.clone() }),
        PeMode::Lpe => {
            let l = lpe.ok_or_else(|| Error::Config("lpe mode needs an LPE matrix".into()))?;
            if m.cols() != l.matrix.cols() {
                return Err(Error::Dimension(format!(
                    "elementwise sum needs dim(M) = dim(LPE); got {} vs {}",
                    m.cols(),
                    l.matrix.cols()
                )));
            }
            Ok(SpeInput {
                e: m.add(&l.matrix)?,
            })
        }
        PeMode::Spe => {
            let l = lpe.ok_or_else(|| Error::Config("spe mode needs an LPE matrix".into()))?;
            let g = gpe.ok_or_else(|| Error::Config("spe mode needs a GPE matrix".into()))?;
            spe_compose(m, l, g)
        }
    }
}
