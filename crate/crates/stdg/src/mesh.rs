//! Tensor-product space-time meshes: a quasi-uniform time partition times a
//! conforming axis-aligned quadrilateral mesh of a rectangular domain, with
//! face topology, outward normals and boundary labels.

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("refinement level n_r must be at least 1 (got {0})")]
    BadRefinement(i32),
    #[error("domain extent {extent} is not an integer multiple of h = {h}")]
    NonIntegerCells { extent: f64, h: f64 },
    #[error("final time {t_final} is not an integer multiple of tau = {tau}")]
    NonIntegerSlabs { t_final: f64, tau: f64 },
    #[error("time points must be strictly increasing starting at 0")]
    BadTimePoints,
    #[error("quasi-uniformity violated: tau_{j} = {tau_j} outside [C_sr*tau, tau]")]
    NotQuasiUniform { j: usize, tau_j: f64 },
    #[error("mesh balance h^omega <= c_r*tau <= h < 1 violated (h = {h}, tau = {tau})")]
    BalanceViolated { h: f64, tau: f64 },
    #[error("Dirichlet boundary must have positive measure")]
    NoDirichlet,
    #[error("invalid cell index {0}")]
    BadCell(usize),
    #[error("invalid face index {0}")]
    BadFace(usize),
    #[error("cell {cell} is not adjacent to face {face}")]
    NotAdjacent { cell: usize, face: usize },
}

/// Time points `0 = t_0 < t_1 < … < t_k = T` with max step `tau_max`.
#[derive(Debug, Clone)]
pub struct TimePartition {
    pub points: Vec<f64>,
    pub tau_max: f64,
    /// Shape-regularity constant of the time grid; 1 for uniform partitions.
    pub c_sr: f64,
}

impl TimePartition {
    pub fn uniform(t_final: f64, num_slabs: usize) -> Self {
        let tau = t_final / num_slabs as f64;
        let points = (0..=num_slabs)
            .map(|j| if j == num_slabs { t_final } else { j as f64 * tau })
            .collect();
        Self { points, tau_max: tau, c_sr: 1.0 }
    }

    pub fn num_slabs(&self) -> usize {
        self.points.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Bounds `(t_{j-1}, t_j)` of slab `j` (0-based).
    pub fn slab_bounds(&self, j: usize) -> (f64, f64) {
        (self.points[j], self.points[j + 1])
    }

    pub fn tau(&self, j: usize) -> f64 {
        self.points[j + 1] - self.points[j]
    }

    /// Index of the slab whose closed interval contains `t`; interior points
    /// of a slab map uniquely, slab boundaries map to the earlier slab.
    pub fn slab_containing(&self, t: f64) -> Option<usize> {
        if t < self.points[0] || t > self.t_final() {
            return None;
        }
        if t == self.points[0] {
            return Some(0);
        }
        let j = self.points.partition_point(|&p| p < t);
        Some(j - 1)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.points.len() < 2 || self.points[0] != 0.0 {
            return Err(MeshError::BadTimePoints);
        }
        for w in self.points.windows(2) {
            if w[1] <= w[0] {
                return Err(MeshError::BadTimePoints);
            }
        }
        for j in 0..self.num_slabs() {
            let tau_j = self.tau(j);
            if tau_j > self.tau_max * (1.0 + 1e-12)
                || tau_j < self.c_sr * self.tau_max * (1.0 - 1e-12)
            {
                return Err(MeshError::NotQuasiUniform { j, tau_j });
            }
        }
        Ok(())
    }
}

/// Boundary condition kind for exterior faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceLabel {
    Interior,
    Dirichlet,
    Neumann,
}

/// Result of a neighbor query through a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborOf {
    Cell(usize),
    Boundary(BoundaryKind),
}

/// An axis-aligned mesh face. `normal` points outward from `owner`; for
/// interior faces `neighbor` is the unique cell on the other side.
#[derive(Debug, Clone)]
pub struct Face {
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub label: FaceLabel,
    pub normal: [f64; 2],
    /// Axis the face is orthogonal to (0: normal along x, 1: along y).
    pub axis: usize,
    /// Coordinate of the face along its normal axis.
    pub position: f64,
    /// Tangential extent of the face.
    pub span: (f64, f64),
    /// Face diameter `h_F` (the edge length).
    pub length: f64,
}

impl Face {
    pub fn midpoint(&self) -> [f64; 2] {
        let mid = 0.5 * (self.span.0 + self.span.1);
        if self.axis == 0 {
            [self.position, mid]
        } else {
            [mid, self.position]
        }
    }
}

/// Assigns boundary labels to exterior faces by midpoint predicate.
#[derive(Clone)]
pub enum BoundaryLabeler {
    AllDirichlet,
    /// Faces whose midpoint satisfies the predicate become Neumann.
    NeumannWhere(Arc<dyn Fn(f64, f64) -> bool + Send + Sync>),
}

impl BoundaryLabeler {
    fn label(&self, x: f64, y: f64) -> BoundaryKind {
        match self {
            BoundaryLabeler::AllDirichlet => BoundaryKind::Dirichlet,
            BoundaryLabeler::NeumannWhere(pred) => {
                if pred(x, y) {
                    BoundaryKind::Neumann
                } else {
                    BoundaryKind::Dirichlet
                }
            }
        }
    }
}

impl std::fmt::Debug for BoundaryLabeler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryLabeler::AllDirichlet => write!(f, "AllDirichlet"),
            BoundaryLabeler::NeumannWhere(_) => write!(f, "NeumannWhere(..)"),
        }
    }
}

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    /// `(-1/2, 1/2)²`, the domain of the bump experiment.
    pub fn centered_unit() -> Self {
        Self { x0: -0.5, x1: 0.5, y0: -0.5, y1: 0.5 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Conforming mesh of `Rect` into `nx × ny` axis-aligned rectangles.
///
/// Cell `K = iy*nx + ix` covers
/// `(x0 + ix·hx, x0 + (ix+1)·hx) × (y0 + iy·hy, y0 + (iy+1)·hy)`.
#[derive(Debug, Clone)]
pub struct SpatialMesh {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub faces: Vec<Face>,
    /// Face ids per cell in the order [west, east, south, north].
    cell_faces: Vec<[usize; 4]>,
}

impl SpatialMesh {
    pub fn uniform(
        domain: Rect,
        nx: usize,
        ny: usize,
        labeler: &BoundaryLabeler,
    ) -> Result<Self, MeshError> {
        assert!(nx > 0 && ny > 0 && domain.width() > 0.0 && domain.height() > 0.0);
        let hx = domain.width() / nx as f64;
        let hy = domain.height() / ny as f64;
        let cell = |ix: usize, iy: usize| iy * nx + ix;

        let mut faces = Vec::with_capacity((nx + 1) * ny + (ny + 1) * nx);
        let mut cell_faces = vec![[usize::MAX; 4]; nx * ny];
        // vertical faces (normal along x)
        for iy in 0..ny {
            let span = (domain.y0 + iy as f64 * hy, domain.y0 + (iy + 1) as f64 * hy);
            for ixf in 0..=nx {
                let position = domain.x0 + ixf as f64 * hx;
                let id = faces.len();
                let face = if ixf == 0 {
                    cell_faces[cell(0, iy)][0] = id;
                    Face {
                        owner: cell(0, iy),
                        neighbor: None,
                        label: FaceLabel::Interior, // fixed up below
                        normal: [-1.0, 0.0],
                        axis: 0,
                        position,
                        span,
                        length: hy,
                    }
                } else if ixf == nx {
                    cell_faces[cell(nx - 1, iy)][1] = id;
                    Face {
                        owner: cell(nx - 1, iy),
                        neighbor: None,
                        label: FaceLabel::Interior,
                        normal: [1.0, 0.0],
                        axis: 0,
                        position,
                        span,
                        length: hy,
                    }
                } else {
                    cell_faces[cell(ixf - 1, iy)][1] = id;
                    cell_faces[cell(ixf, iy)][0] = id;
                    Face {
                        owner: cell(ixf - 1, iy),
                        neighbor: Some(cell(ixf, iy)),
                        label: FaceLabel::Interior,
                        normal: [1.0, 0.0],
                        axis: 0,
                        position,
                        span,
                        length: hy,
                    }
                };
                faces.push(face);
            }
        }
        // horizontal faces (normal along y)
        for iyf in 0..=ny {
            let position = domain.y0 + iyf as f64 * hy;
            for ix in 0..nx {
                let span = (domain.x0 + ix as f64 * hx, domain.x0 + (ix + 1) as f64 * hx);
                let id = faces.len();
                let face = if iyf == 0 {
                    cell_faces[cell(ix, 0)][2] = id;
                    Face {
                        owner: cell(ix, 0),
                        neighbor: None,
                        label: FaceLabel::Interior,
                        normal: [0.0, -1.0],
                        axis: 1,
                        position,
                        span,
                        length: hx,
                    }
                } else if iyf == ny {
                    cell_faces[cell(ix, ny - 1)][3] = id;
                    Face {
                        owner: cell(ix, ny - 1),
                        neighbor: None,
                        label: FaceLabel::Interior,
                        normal: [0.0, 1.0],
                        axis: 1,
                        position,
                        span,
                        length: hx,
                    }
                } else {
                    cell_faces[cell(ix, iyf - 1)][3] = id;
                    cell_faces[cell(ix, iyf)][2] = id;
                    Face {
                        owner: cell(ix, iyf - 1),
                        neighbor: Some(cell(ix, iyf)),
                        label: FaceLabel::Interior,
                        normal: [0.0, 1.0],
                        axis: 1,
                        position,
                        span,
                        length: hx,
                    }
                };
                faces.push(face);
            }
        }

        let mut dirichlet_measure = 0.0;
        for face in &mut faces {
            if face.neighbor.is_none() {
                let [mx, my] = face.midpoint();
                face.label = match labeler.label(mx, my) {
                    BoundaryKind::Dirichlet => {
                        dirichlet_measure += face.length;
                        FaceLabel::Dirichlet
                    }
                    BoundaryKind::Neumann => FaceLabel::Neumann,
                };
            }
        }
        if dirichlet_measure <= 0.0 {
            return Err(MeshError::NoDirichlet);
        }

        Ok(Self { domain, nx, ny, hx, hy, faces, cell_faces })
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Mesh size `h`: the maximal cell edge length (the paper's `h = 2^{-n_r}`
    /// for square cells on the unit square).
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn cell_area(&self, _k: usize) -> f64 {
        self.hx * self.hy
    }

    /// Cell bounds `((x0, x1), (y0, y1))`.
    pub fn cell_rect(&self, k: usize) -> ((f64, f64), (f64, f64)) {
        let ix = k % self.nx;
        let iy = k / self.nx;
        (
            (self.domain.x0 + ix as f64 * self.hx, self.domain.x0 + (ix + 1) as f64 * self.hx),
            (self.domain.y0 + iy as f64 * self.hy, self.domain.y0 + (iy + 1) as f64 * self.hy),
        )
    }

    /// Face ids of cell `k` in the order [west, east, south, north].
    pub fn faces_of(&self, k: usize) -> Result<[usize; 4], MeshError> {
        self.cell_faces.get(k).copied().ok_or(MeshError::BadCell(k))
    }

    /// The unique neighbor cell `K_F` through `face`, or the boundary label.
    pub fn neighbor(&self, face: usize, cell: usize) -> Result<NeighborOf, MeshError> {
        let f = self.faces.get(face).ok_or(MeshError::BadFace(face))?;
        match (f.owner == cell, f.neighbor) {
            (true, Some(n)) => Ok(NeighborOf::Cell(n)),
            (false, Some(n)) if n == cell => Ok(NeighborOf::Cell(f.owner)),
            (true, None) => Ok(NeighborOf::Boundary(match f.label {
                FaceLabel::Dirichlet => BoundaryKind::Dirichlet,
                FaceLabel::Neumann => BoundaryKind::Neumann,
                FaceLabel::Interior => unreachable!("exterior face with interior label"),
            })),
            _ => Err(MeshError::NotAdjacent { cell, face }),
        }
    }

    /// Outward normal of `face` as seen from `cell`.
    pub fn outward_normal(&self, face: usize, cell: usize) -> [f64; 2] {
        let f = &self.faces[face];
        if f.owner == cell {
            f.normal
        } else {
            [-f.normal[0], -f.normal[1]]
        }
    }

    /// Cell containing the point, for strictly interior points.
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        let fx = (x - self.domain.x0) / self.hx;
        let fy = (y - self.domain.y0) / self.hy;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let ix = (fx.floor() as usize).min(self.nx - 1);
        let iy = (fy.floor() as usize).min(self.ny - 1);
        if x > self.domain.x1 || y > self.domain.y1 {
            return None;
        }
        Some(iy * self.nx + ix)
    }
}

/// Mesh balance record for `h^ω ≤ c_r τ ≤ h < 1`.
#[derive(Debug, Clone, Copy)]
pub struct MeshBalance {
    pub omega: f64,
    pub c_r: f64,
}

/// Tensor product of a time partition and a spatial mesh. Space-time cells
/// are indexed by `R = (j, K)`.
#[derive(Debug, Clone)]
pub struct SpaceTimeMesh {
    pub time: TimePartition,
    pub space: SpatialMesh,
    pub balance: MeshBalance,
}

impl SpaceTimeMesh {
    /// Uniform tensor mesh with `h = 2^{-n_r}` and `τ = h / ratio`
    /// (the experiments use `ratio = 4`, i.e. `4τ = h`).
    pub fn build_uniform(
        domain: Rect,
        t_final: f64,
        n_r: i32,
        ratio: f64,
        labeler: &BoundaryLabeler,
    ) -> Result<Self, MeshError> {
        if n_r < 1 {
            return Err(MeshError::BadRefinement(n_r));
        }
        assert!(ratio > 0.0 && t_final > 0.0);
        let h = 0.5f64.powi(n_r);
        let cells_along = |extent: f64| -> Result<usize, MeshError> {
            let n = extent / h;
            if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
                Err(MeshError::NonIntegerCells { extent, h })
            } else {
                Ok(n.round() as usize)
            }
        };
        let nx = cells_along(domain.width())?;
        let ny = cells_along(domain.height())?;
        let tau = h / ratio;
        let slabs = t_final / tau;
        if (slabs - slabs.round()).abs() > 1e-9 || slabs.round() < 1.0 {
            return Err(MeshError::NonIntegerSlabs { t_final, tau });
        }
        let mesh = Self {
            time: TimePartition::uniform(t_final, slabs.round() as usize),
            space: SpatialMesh::uniform(domain, nx, ny, labeler)?,
            balance: MeshBalance { omega: 1.0, c_r: ratio },
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_cells(&self) -> usize {
        self.space.num_cells()
    }

    pub fn num_slabs(&self) -> usize {
        self.time.num_slabs()
    }

    pub fn num_st_cells(&self) -> usize {
        self.num_slabs() * self.num_cells()
    }

    /// Linear index of the space-time cell `R = (j, K)`.
    #[inline]
    pub fn st_index(&self, slab: usize, cell: usize) -> usize {
        slab * self.num_cells() + cell
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        self.time.validate()?;
        let h = self.space.h();
        let tau = self.time.tau_max;
        let lhs = h.powf(self.balance.omega);
        let mid = self.balance.c_r * tau;
        let tol = 1e-12 * (1.0 + h);
        if lhs > mid + tol || mid > h + tol || h >= 1.0 {
            return Err(MeshError::BalanceViolated { h, tau });
        }
        Ok(())
    }
}
