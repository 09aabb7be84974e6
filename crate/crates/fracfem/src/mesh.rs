//! Tensor-product grids on the truncated cylinder Ω×(0,Y): quasi-uniform in
//! Ω (unit interval or unit square), uniform or power-graded in y, with
//! Dirichlet classification on the lateral boundary and the top face.
//! Nodes are numbered lexicographically, x-fastest, bottom layer first.

use crate::{Error, Result};
use alloc::vec::Vec;
use libm::{log, pow, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    UnitInterval,
    UnitSquare,
}

/// The base domain Ω with M_Ω congruent subdivisions per direction.
#[derive(Debug, Clone, Copy)]
pub struct OmegaSpec {
    pub kind: DomainKind,
    pub m_omega: usize,
}

impl OmegaSpec {
    pub fn new(kind: DomainKind, m_omega: usize) -> Result<Self> {
        if m_omega == 0 {
            return Err(Error::Config("omega subdivisions must be positive"));
        }
        Ok(OmegaSpec { kind, m_omega })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::UnitInterval => 1,
            DomainKind::UnitSquare => 2,
        }
    }

    /// Grid coordinate of the i-th node along one direction.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / self.m_omega as f64
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m_omega as f64
    }

    pub fn nodes_per_direction(&self) -> usize {
        self.m_omega + 1
    }

    pub fn nodes_per_layer(&self) -> usize {
        let nd = self.nodes_per_direction();
        match self.kind {
            DomainKind::UnitInterval => nd,
            DomainKind::UnitSquare => nd * nd,
        }
    }

    pub fn cells_per_layer(&self) -> usize {
        match self.kind {
            DomainKind::UnitInterval => self.m_omega,
            DomainKind::UnitSquare => self.m_omega * self.m_omega,
        }
    }
}

/// Ascending partition 0 = y_0 < … < y_M = Y of the extension direction.
#[derive(Debug, Clone)]
pub struct YPartition {
    pub points: Vec<f64>,
    pub gamma: f64,
    pub m: usize,
    pub y: f64,
}

/// Power-law partition y_k = (k/M)^γ·Y; γ = 1 gives the uniform grid.
/// The last point is pinned to Y so the endpoint is exact.
pub fn make_y_partition(m: usize, y: f64, gamma: f64) -> Result<YPartition> {
    if m < 2 {
        return Err(Error::Config("y-partition needs at least 2 intervals"));
    }
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::Config("truncation height must be positive"));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::Config("grading exponent must be at least 1"));
    }
    let mut points = Vec::with_capacity(m + 1);
    points.push(0.0);
    for k in 1..m {
        points.push(pow(k as f64 / m as f64, gamma) * y);
    }
    points.push(y);
    Ok(YPartition { points, gamma, m, y })
}

impl YPartition {
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Largest length ratio between adjacent intervals (weak regularity σ).
    pub fn max_neighbor_ratio(&self) -> f64 {
        let mut worst = 1.0f64;
        for w in self.points.windows(3) {
            let h1 = w[1] - w[0];
            let h2 = w[2] - w[1];
            worst = worst.max(h2 / h1).max(h1 / h2);
        }
        worst
    }

    /// Whether the grading beats the exponent the energy estimate needs.
    pub fn admissible_for(&self, alpha: f64) -> bool {
        self.gamma > min_grading(alpha)
    }
}

/// Threshold grading 3/(1−α); convergence needs strictly more.
pub fn min_grading(alpha: f64) -> f64 {
    3.0 / (1.0 - alpha)
}

/// Default grading with a 5% safety margin over the threshold.
pub fn default_grading(alpha: f64) -> f64 {
    1.05 * min_grading(alpha)
}

/// Truncation height Y = max(1, (2/√λ₁)(ln C + 2 ln(1/ε))).
pub fn choose_truncation(eps: f64, lambda1: f64, c: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config("truncation tolerance must lie in (0,1)"));
    }
    if !(lambda1 > 0.0 && c > 0.0) {
        return Err(Error::Config("truncation needs positive lambda1 and C"));
    }
    let y0 = 2.0 / sqrt(lambda1) * (log(c) + 2.0 * log(1.0 / eps));
    Ok(y0.max(1.0))
}

/// Tensor mesh of Q1 cells on the truncated cylinder, with the Dirichlet
/// mask on ∂_L C_Y ∪ Ω×{Y}; the bottom face Ω×{0} stays free.
#[derive(Debug, Clone)]
pub struct CylinderMesh {
    pub omega: OmegaSpec,
    pub ypart: YPartition,
    dirichlet: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
}

pub fn build_cylinder_mesh(omega: OmegaSpec, ypart: YPartition) -> CylinderMesh {
    let per_layer = omega.nodes_per_layer();
    let nd = omega.nodes_per_direction();
    let m_omega = omega.m_omega;
    let total = per_layer * (ypart.m + 1);
    let mut dirichlet = Vec::with_capacity(total);
    for k in 0..=ypart.m {
        for p in 0..per_layer {
            let lateral = match omega.kind {
                DomainKind::UnitInterval => p == 0 || p == m_omega,
                DomainKind::UnitSquare => {
                    let i1 = p % nd;
                    let i2 = p / nd;
                    i1 == 0 || i1 == m_omega || i2 == 0 || i2 == m_omega
                }
            };
            dirichlet.push(lateral || k == ypart.m);
        }
    }
    let mut free_index = Vec::with_capacity(total);
    let mut free_nodes = Vec::new();
    for (node, &fixed) in dirichlet.iter().enumerate() {
        if fixed {
            free_index.push(None);
        } else {
            free_index.push(Some(free_nodes.len()));
            free_nodes.push(node);
        }
    }
    CylinderMesh { omega, ypart, dirichlet, free_index, free_nodes }
}

impl CylinderMesh {
    pub fn num_nodes(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn num_cells(&self) -> usize {
        self.ypart.m * self.omega.cells_per_layer()
    }

    pub fn num_free(&self) -> usize {
        self.free_nodes.len()
    }

    /// Global node id from per-direction indices and the y-layer.
    pub fn node_id(&self, ix: &[usize], layer: usize) -> usize {
        let nd = self.omega.nodes_per_direction();
        let within = match self.omega.kind {
            DomainKind::UnitInterval => ix[0],
            DomainKind::UnitSquare => ix[1] * nd + ix[0],
        };
        layer * self.omega.nodes_per_layer() + within
    }

    pub fn layer_of(&self, node: usize) -> usize {
        node / self.omega.nodes_per_layer()
    }

    /// Per-direction grid indices of a node within its layer.
    pub fn x_indices(&self, node: usize) -> [usize; 2] {
        let p = node % self.omega.nodes_per_layer();
        match self.omega.kind {
            DomainKind::UnitInterval => [p, 0],
            DomainKind::UnitSquare => {
                let nd = self.omega.nodes_per_direction();
                [p % nd, p / nd]
            }
        }
    }

    /// Spatial position ([x1, x2], y); x2 is 0 on the interval.
    pub fn node_position(&self, node: usize) -> ([f64; 2], f64) {
        let ix = self.x_indices(node);
        let x = [self.omega.coord(ix[0]), self.omega.coord(ix[1])];
        (x, self.ypart.points[self.layer_of(node)])
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.dirichlet[node]
    }

    /// Free-dof number of a node, None on Γ_D.
    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free_index[node]
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    /// Expands free-dof values to the full nodal vector, zero on Γ_D.
    pub fn expand_free(&self, free_values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(free_values.len(), self.free_nodes.len());
        let mut full = alloc::vec![0.0; self.num_nodes()];
        for (dof, &node) in self.free_nodes.iter().enumerate() {
            full[node] = free_values[dof];
        }
        full
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            n: self.omega.dim(),
            m_omega: self.omega.m_omega,
            m: self.ypart.m,
            y: self.ypart.y,
            gamma: self.ypart.gamma,
            nodes: self.num_nodes(),
            cells: self.num_cells(),
            free_dofs: self.num_free(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSummary {
    pub n: usize,
    pub m_omega: usize,
    pub m: usize,
    pub y: f64,
    pub gamma: f64,
    pub nodes: usize,
    pub cells: usize,
    pub free_dofs: usize,
}
