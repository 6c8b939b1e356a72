//! The broken space-time polynomial space `Z_h`: per-cell L²-orthonormal
//! tensor Legendre bases, Gauss quadrature, degree and dof maps, field
//! evaluation and the projections `Π_h` (spatial L²) and `π_h` (space-time).
//!
//! Local dof layout within a space-time cell with degrees `(p, q)`:
//! `idx = (c·(p+1) + m)·(q+1)² + n` where `c` is the solution component,
//! `m` the time mode and `n = iy·(q+1) + ix` the spatial tensor mode. The
//! basis is orthonormal in `L²(R)`, so local mass matrices are identities
//! and coefficient vectors coincide with `L²` Riesz representatives.

use crate::mesh::{FaceLabel, SpaceTimeMesh};
use crate::model::{ProblemData, StateGradient, StatePoint, StateValue, COMPONENTS};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("point ({x}, {y}) at t = {t} lies outside cell (slab {slab}, cell {cell})")]
    PointOutsideCell { slab: usize, cell: usize, t: f64, x: f64, y: f64 },
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("space-time projection requires time degree >= 1 (cell {cell} has p = 0)")]
    TimeDegreeTooLow { cell: usize },
    #[error("degree {0} exceeds the configured ceiling {1}")]
    DegreeAboveCeiling(u8, u8),
}

/// Gauss-Legendre rule on the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Rule with `n` points (exact for polynomials of degree `2n - 1`).
    pub fn with_points(n: usize) -> Self {
        assert!(n >= 1);
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Newton iteration on P_n over [-1, 1]
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d2) = legendre_with_derivative(n, x);
                    dp = d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = 0.5 * (1.0 - x); // descending roots -> ascending points
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        if n % 2 == 1 {
            points[n / 2] = 0.5;
        }
        Self { points, weights }
    }

    /// Smallest rule exact for polynomials of total degree `deg`.
    pub fn for_exactness(deg: usize) -> Self {
        Self::with_points(deg / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Legendre polynomial `P_n` and its derivative at `x ∈ [-1, 1]`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let d = if (1.0 - x * x).abs() < 1e-14 {
        // limit value at the endpoints
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    } else {
        n as f64 * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, d)
}

/// Values and first derivatives of the L²(0,1)-orthonormal Legendre basis
/// `L̃_m(ξ) = √(2m+1) P_m(2ξ - 1)` for `m = 0..=deg` at a reference point.
pub fn ortho_basis(deg: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
    let x = 2.0 * xi - 1.0;
    let mut vals = vec![0.0; deg + 1];
    let mut ders = vec![0.0; deg + 1];
    let mut p_prev = 0.0;
    let mut p = 1.0;
    let mut d_prev = 0.0;
    let mut d = 0.0;
    for m in 0..=deg {
        if m > 0 {
            let mf = (m - 1) as f64;
            let p_next = if m == 1 {
                x
            } else {
                ((2.0 * mf + 1.0) * x * p - mf * p_prev) / (mf + 1.0)
            };
            // P'_{m} = P'_{m-2} + (2m-1) P_{m-1}
            let d_next = d_prev + (2.0 * mf + 1.0) * p;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        let scale = (2.0 * m as f64 + 1.0).sqrt();
        vals[m] = scale * p;
        ders[m] = scale * 2.0 * d;
    }
    (vals, ders)
}

/// Basis values/derivatives tabulated at a set of reference points,
/// mode-major: `vals[m * npts + i]`.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub deg: usize,
    pub npts: usize,
    pub vals: Vec<f64>,
    pub ders: Vec<f64>,
}

impl BasisTable {
    pub fn tabulate(deg: usize, points: &[f64]) -> Self {
        let npts = points.len();
        let mut vals = vec![0.0; (deg + 1) * npts];
        let mut ders = vec![0.0; (deg + 1) * npts];
        for (i, &xi) in points.iter().enumerate() {
            let (v, d) = ortho_basis(deg, xi);
            for m in 0..=deg {
                vals[m * npts + i] = v[m];
                ders[m * npts + i] = d[m];
            }
        }
        Self { deg, npts, vals, ders }
    }

    #[inline]
    pub fn val(&self, mode: usize, pt: usize) -> f64 {
        self.vals[mode * self.npts + pt]
    }

    #[inline]
    pub fn der(&self, mode: usize, pt: usize) -> f64 {
        self.ders[mode * self.npts + pt]
    }
}

/// Per-space-time-cell polynomial degrees `(p_R, q_R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeMap {
    pq: Vec<(u8, u8)>,
    pub ceiling: u8,
}

impl DegreeMap {
    pub const DEFAULT_CEILING: u8 = 6;

    pub fn uniform(mesh: &SpaceTimeMesh, p: u8, q: u8) -> Self {
        Self { pq: vec![(p, q); mesh.num_st_cells()], ceiling: Self::DEFAULT_CEILING }
    }

    pub fn from_vec(pq: Vec<(u8, u8)>, ceiling: u8) -> Result<Self, SpaceError> {
        for &(p, q) in &pq {
            if p > ceiling || q > ceiling {
                return Err(SpaceError::DegreeAboveCeiling(p.max(q), ceiling));
            }
        }
        Ok(Self { pq, ceiling })
    }

    #[inline]
    pub fn get(&self, st_cell: usize) -> (usize, usize) {
        let (p, q) = self.pq[st_cell];
        (p as usize, q as usize)
    }

    pub fn raw(&self) -> &[(u8, u8)] {
        &self.pq
    }

    pub fn len(&self) -> usize {
        self.pq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pq.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.pq.iter().map(|&(p, q)| p.max(q) as usize).max().unwrap_or(0)
    }
}

/// Number of local dofs of a cell with degrees `(p, q)`.
#[inline]
pub fn cell_dofs(p: usize, q: usize) -> usize {
    COMPONENTS * (p + 1) * (q + 1) * (q + 1)
}

/// Local dof index within a cell.
#[inline]
pub fn local_index(p: usize, q: usize, c: usize, m: usize, n: usize) -> usize {
    debug_assert!(c < COMPONENTS && m <= p && n < (q + 1) * (q + 1));
    (c * (p + 1) + m) * (q + 1) * (q + 1) + n
}

/// Contiguous offsets of every space-time cell into the global vector.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub cell_offsets: Vec<usize>,
    pub cell_sizes: Vec<usize>,
    pub slab_offsets: Vec<usize>,
    pub total: usize,
}

impl DofMap {
    pub fn build(mesh: &SpaceTimeMesh, degrees: &DegreeMap) -> Self {
        let ncells = mesh.num_cells();
        let nslabs = mesh.num_slabs();
        let mut cell_offsets = Vec::with_capacity(nslabs * ncells);
        let mut cell_sizes = Vec::with_capacity(nslabs * ncells);
        let mut slab_offsets = Vec::with_capacity(nslabs + 1);
        let mut offset = 0;
        for j in 0..nslabs {
            slab_offsets.push(offset);
            for k in 0..ncells {
                let (p, q) = degrees.get(mesh.st_index(j, k));
                cell_offsets.push(offset);
                cell_sizes.push(cell_dofs(p, q));
                offset += cell_dofs(p, q);
            }
        }
        slab_offsets.push(offset);
        Self { cell_offsets, cell_sizes, slab_offsets, total: offset }
    }

    #[inline]
    pub fn cell_range(&self, st_cell: usize) -> std::ops::Range<usize> {
        self.cell_offsets[st_cell]..self.cell_offsets[st_cell] + self.cell_sizes[st_cell]
    }

    #[inline]
    pub fn slab_range(&self, slab: usize) -> std::ops::Range<usize> {
        self.slab_offsets[slab]..self.slab_offsets[slab + 1]
    }
}

/// Coefficient vector over the broken space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(len: usize) -> Self {
        Self { coeffs: vec![0.0; len] }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Spatial coefficient slice: per spatial cell, `(c, n)`-indexed orthonormal
/// coefficients on that cell's spatial trace space (the result of `Π_h`).
#[derive(Debug, Clone)]
pub struct SpatialSlice {
    /// `coeffs[cell][c * (q+1)² + n]`
    pub coeffs: Vec<Vec<f64>>,
    pub qdeg: Vec<usize>,
}

/// Face-wise trace coefficients of boundary data: per (slab, face),
/// `(c, m, nt)`-indexed with `m` the time mode and `nt` the tangential mode.
#[derive(Debug, Clone)]
pub struct FaceField {
    pub coeffs: Vec<Option<Vec<f64>>>,
    pub nfaces: usize,
}

impl FaceField {
    pub fn get(&self, slab: usize, face: usize) -> Option<&[f64]> {
        self.coeffs[slab * self.nfaces + face].as_deref()
    }
}

/// Interpolated data fields `(f_h, u_{0,h}, u_{D,h}, u_{N,h})`.
#[derive(Debug, Clone)]
pub struct InterpolatedData {
    pub f_h: DiscreteField,
    pub u0_h: SpatialSlice,
    pub u_d: FaceField,
    pub u_n: FaceField,
}

/// The broken space: mesh, degrees and dof map.
#[derive(Debug, Clone)]
pub struct Space {
    pub mesh: Arc<SpaceTimeMesh>,
    pub degrees: DegreeMap,
    pub dofs: DofMap,
}

impl Space {
    pub fn new(mesh: Arc<SpaceTimeMesh>, degrees: DegreeMap) -> Self {
        assert_eq!(degrees.len(), mesh.num_st_cells());
        let dofs = DofMap::build(&mesh, &degrees);
        Self { mesh, degrees, dofs }
    }

    pub fn zero_field(&self) -> DiscreteField {
        DiscreteField::zeros(self.dofs.total)
    }

    fn check_cell_point(
        &self,
        slab: usize,
        cell: usize,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<(f64, f64, f64), SpaceError> {
        let (t0, t1) = self.mesh.time.slab_bounds(slab);
        let ((x0, x1), (y0, y1)) = self.mesh.space.cell_rect(cell);
        let tol_t = 1e-12 * (1.0 + t1.abs());
        let tol_x = 1e-12 * (1.0 + x1.abs().max(x0.abs()));
        if t < t0 - tol_t
            || t > t1 + tol_t
            || x < x0 - tol_x
            || x > x1 + tol_x
            || y < y0 - tol_x
            || y > y1 + tol_x
        {
            return Err(SpaceError::PointOutsideCell { slab, cell, t, x, y });
        }
        Ok(((t - t0) / (t1 - t0), (x - x0) / (x1 - x0), (y - y0) / (y1 - y0)))
    }

    /// Geometry scales of a space-time cell: `(τ_j, h_x, h_y)`.
    #[inline]
    pub fn cell_scales(&self, slab: usize) -> (f64, f64, f64) {
        (self.mesh.time.tau(slab), self.mesh.space.hx, self.mesh.space.hy)
    }

    /// Evaluate value, spatial gradient and time derivative of a field at a
    /// point inside the closure of cell `(slab, cell)`. One-sided traces at
    /// slab or face boundaries are selected by the caller through the cell.
    pub fn eval_full(
        &self,
        field: &DiscreteField,
        slab: usize,
        cell: usize,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<(StateValue, StateGradient, StateValue), SpaceError> {
        if field.coeffs.len() != self.dofs.total {
            return Err(SpaceError::LengthMismatch {
                got: field.coeffs.len(),
                expected: self.dofs.total,
            });
        }
        let (xi_t, xi_x, xi_y) = self.check_cell_point(slab, cell, t, x, y)?;
        let st = self.mesh.st_index(slab, cell);
        let (p, q) = self.degrees.get(st);
        let (tau, hx, hy) = self.cell_scales(slab);
        let st_scale = 1.0 / (tau * hx * hy).sqrt();

        let (tv, td) = ortho_basis(p, xi_t);
        let (xv, xd) = ortho_basis(q, xi_x);
        let (yv, yd) = ortho_basis(q, xi_y);

        let coeffs = &field.coeffs[self.dofs.cell_range(st)];
        let nsp = (q + 1) * (q + 1);
        let mut value = [0.0; COMPONENTS];
        let mut ddt = [0.0; COMPONENTS];
        let mut ddx = [0.0; COMPONENTS];
        let mut ddy = [0.0; COMPONENTS];
        for c in 0..COMPONENTS {
            for m in 0..=p {
                let base = (c * (p + 1) + m) * nsp;
                let mut s_val = 0.0;
                let mut s_dx = 0.0;
                let mut s_dy = 0.0;
                for iy in 0..=q {
                    let row = &coeffs[base + iy * (q + 1)..base + (iy + 1) * (q + 1)];
                    let mut r_val = 0.0;
                    let mut r_dx = 0.0;
                    for ix in 0..=q {
                        r_val += row[ix] * xv[ix];
                        r_dx += row[ix] * xd[ix];
                    }
                    s_val += r_val * yv[iy];
                    s_dx += r_dx * yv[iy];
                    s_dy += r_val * yd[iy];
                }
                value[c] += tv[m] * s_val;
                ddt[c] += td[m] * s_val;
                ddx[c] += tv[m] * s_dx;
                ddy[c] += tv[m] * s_dy;
            }
            value[c] *= st_scale;
            ddt[c] *= st_scale / tau;
            ddx[c] *= st_scale / hx;
            ddy[c] *= st_scale / hy;
        }
        Ok((
            StateValue::new(value[0], value[1], value[2]),
            StateGradient {
                grad_p: [ddx[0], ddy[0]],
                grad_v: [[ddx[1], ddy[1]], [ddx[2], ddy[2]]],
            },
            StateValue::new(ddt[0], ddt[1], ddt[2]),
        ))
    }

    pub fn eval(
        &self,
        field: &DiscreteField,
        slab: usize,
        cell: usize,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<StateValue, SpaceError> {
        Ok(self.eval_full(field, slab, cell, t, x, y)?.0)
    }

    pub fn eval_grad(
        &self,
        field: &DiscreteField,
        slab: usize,
        cell: usize,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<StateGradient, SpaceError> {
        Ok(self.eval_full(field, slab, cell, t, x, y)?.1)
    }

    pub fn eval_dt(
        &self,
        field: &DiscreteField,
        slab: usize,
        cell: usize,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<StateValue, SpaceError> {
        Ok(self.eval_full(field, slab, cell, t, x, y)?.2)
    }

    pub fn eval_state(
        &self,
        field: &DiscreteField,
        slab: usize,
        cell: usize,
        t: f64,
        x: f64,
        y: f64,
    ) -> Result<StatePoint, SpaceError> {
        let (value, grad, _) = self.eval_full(field, slab, cell, t, x, y)?;
        Ok(StatePoint { value, grad })
    }

    /// Spatial `L²` projection `Π_h` of `u` onto the spatial trace space of
    /// slab `slab` (orthonormal coefficients per cell).
    pub fn project_spatial<F>(&self, slab: usize, u: F, extra_points: usize) -> SpatialSlice
    where
        F: Fn(f64, f64) -> StateValue,
    {
        let ncells = self.mesh.num_cells();
        let mut coeffs = Vec::with_capacity(ncells);
        let mut qdeg = Vec::with_capacity(ncells);
        for k in 0..ncells {
            let (_, q) = self.degrees.get(self.mesh.st_index(slab, k));
            qdeg.push(q);
            coeffs.push(self.project_spatial_cell(slab, k, q, &u, extra_points));
        }
        SpatialSlice { coeffs, qdeg }
    }

    fn project_spatial_cell<F>(
        &self,
        _slab: usize,
        cell: usize,
        q: usize,
        u: &F,
        extra_points: usize,
    ) -> Vec<f64>
    where
        F: Fn(f64, f64) -> StateValue,
    {
        let ((x0, x1), (y0, y1)) = self.mesh.space.cell_rect(cell);
        let (hx, hy) = (x1 - x0, y1 - y0);
        let rule = GaussRule::with_points(q + 1 + extra_points);
        let table = BasisTable::tabulate(q, &rule.points);
        let nsp = (q + 1) * (q + 1);
        let mut out = vec![0.0; COMPONENTS * nsp];
        let scale = 1.0 / (hx * hy).sqrt();
        for (i, &xi) in rule.points.iter().enumerate() {
            let x = x0 + xi * hx;
            for (jj, &yj) in rule.points.iter().enumerate() {
                let y = y0 + yj * hy;
                let w = rule.weights[i] * rule.weights[jj] * hx * hy;
                let val = u(x, y);
                for c in 0..COMPONENTS {
                    let vc = val.component(c) * w * scale;
                    for iy in 0..=q {
                        let wy = table.val(iy, jj);
                        for ix in 0..=q {
                            out[c * nsp + iy * (q + 1) + ix] += vc * table.val(ix, i) * wy;
                        }
                    }
                }
            }
        }
        out
    }

    /// Evaluate a spatial slice on cell `cell` of its slab.
    pub fn eval_spatial(
        &self,
        slice: &SpatialSlice,
        cell: usize,
        x: f64,
        y: f64,
    ) -> StateValue {
        let q = slice.qdeg[cell];
        let ((x0, x1), (y0, y1)) = self.mesh.space.cell_rect(cell);
        let (xv, _) = ortho_basis(q, (x - x0) / (x1 - x0));
        let (yv, _) = ortho_basis(q, (y - y0) / (y1 - y0));
        let scale = 1.0 / ((x1 - x0) * (y1 - y0)).sqrt();
        let nsp = (q + 1) * (q + 1);
        let coeffs = &slice.coeffs[cell];
        let mut out = [0.0; COMPONENTS];
        for c in 0..COMPONENTS {
            for iy in 0..=q {
                for ix in 0..=q {
                    out[c] += coeffs[c * nsp + iy * (q + 1) + ix] * xv[ix] * yv[iy];
                }
            }
            out[c] *= scale;
        }
        StateValue::new(out[0], out[1], out[2])
    }

    /// Plain space-time `L²` projection of `u` onto `Z_h`.
    pub fn project_l2<F>(&self, u: F, extra_points: usize) -> DiscreteField
    where
        F: Fn(f64, f64, f64) -> StateValue,
    {
        let mut field = self.zero_field();
        for slab in 0..self.mesh.num_slabs() {
            for cell in 0..self.mesh.num_cells() {
                let st = self.mesh.st_index(slab, cell);
                let (p, q) = self.degrees.get(st);
                let range = self.dofs.cell_range(st);
                self.project_cell_l2(slab, cell, p, q, &u, extra_points, p, &mut field.coeffs[range]);
            }
        }
        field
    }

    /// Per-cell space-time projection of the time modes `m <= mode_cap`.
    #[allow(clippy::too_many_arguments)]
    fn project_cell_l2<F>(
        &self,
        slab: usize,
        cell: usize,
        p: usize,
        q: usize,
        u: &F,
        extra_points: usize,
        mode_cap: usize,
        out: &mut [f64],
    ) where
        F: Fn(f64, f64, f64) -> StateValue,
    {
        let (t0, t1) = self.mesh.time.slab_bounds(slab);
        let ((x0, x1), (y0, y1)) = self.mesh.space.cell_rect(cell);
        let (tau, hx, hy) = (t1 - t0, x1 - x0, y1 - y0);
        let t_rule = GaussRule::with_points(p + 1 + extra_points);
        let s_rule = GaussRule::with_points(q + 1 + extra_points);
        let t_tab = BasisTable::tabulate(p, &t_rule.points);
        let s_tab = BasisTable::tabulate(q, &s_rule.points);
        let nsp = (q + 1) * (q + 1);
        let scale = 1.0 / (tau * hx * hy).sqrt();
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for (it, &xt) in t_rule.points.iter().enumerate() {
            let t = t0 + xt * tau;
            let wt = t_rule.weights[it] * tau;
            for (ix, &xx) in s_rule.points.iter().enumerate() {
                let x = x0 + xx * hx;
                for (iy, &xy) in s_rule.points.iter().enumerate() {
                    let y = y0 + xy * hy;
                    let w = wt * s_rule.weights[ix] * s_rule.weights[iy] * hx * hy * scale;
                    let val = u(t, x, y);
                    for c in 0..COMPONENTS {
                        let vc = val.component(c) * w;
                        for m in 0..=mode_cap.min(p) {
                            let vm = vc * t_tab.val(m, it);
                            let base = (c * (p + 1) + m) * nsp;
                            for jy in 0..=q {
                                let wy = s_tab.val(jy, iy);
                                for jx in 0..=q {
                                    out[base + jy * (q + 1) + jx] += vm * s_tab.val(jx, ix) * wy;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// The space-time projection `π_h`: per cell, all time modes up to
    /// `p - 1` are the `L²` coefficients (property (iii)); the top mode is
    /// fixed so the right slab endpoint matches `Π_h u(t_j)` (property (ii)).
    ///
    /// Requires every time degree to be at least one.
    pub fn project_spacetime<F>(&self, u: F, extra_points: usize) -> Result<DiscreteField, SpaceError>
    where
        F: Fn(f64, f64, f64) -> StateValue,
    {
        for st in 0..self.degrees.len() {
            if self.degrees.get(st).0 < 1 {
                return Err(SpaceError::TimeDegreeTooLow { cell: st });
            }
        }
        let mut field = self.zero_field();
        for slab in 0..self.mesh.num_slabs() {
            let (_, t_end) = self.mesh.time.slab_bounds(slab);
            for cell in 0..self.mesh.num_cells() {
                let st = self.mesh.st_index(slab, cell);
                let (p, q) = self.degrees.get(st);
                let range = self.dofs.cell_range(st);
                self.project_cell_l2(slab, cell, p, q, &u, extra_points, p - 1, &mut field.coeffs[range]);
                // endpoint condition for the top time mode
                let end_proj =
                    self.project_spatial_cell(slab, cell, q, &|x, y| u(t_end, x, y), extra_points);
                let (tv, _) = ortho_basis(p, 1.0);
                let tau = self.mesh.time.tau(slab);
                let nsp = (q + 1) * (q + 1);
                let range = self.dofs.cell_range(st);
                let out = &mut field.coeffs[range];
                for c in 0..COMPONENTS {
                    for n in 0..nsp {
                        // Σ_m c_m φ_m(t_j) = (Π_h u(t_j))_n with φ_m = L̃_m/√τ
                        let mut partial = 0.0;
                        for m in 0..p {
                            partial += out[(c * (p + 1) + m) * nsp + n] * tv[m] / tau.sqrt();
                        }
                        let target = end_proj[c * nsp + n];
                        out[(c * (p + 1) + p) * nsp + n] =
                            (target - partial) * tau.sqrt() / tv[p];
                    }
                }
            }
        }
        Ok(field)
    }

    /// Interpolates the analytic data: `f_h` by local `L²` projection,
    /// `u_{0,h} = Π_h u₀` on the first slab's trace space, and boundary data
    /// by face-wise `L²` projection in the trace space (time ⊗ tangential).
    pub fn interpolate_data(&self, data: &ProblemData, extra_points: usize) -> InterpolatedData {
        let f = data.source.clone();
        let f_h = self.project_l2(move |t, x, y| f(t, x, y), extra_points);
        let u0 = data.initial.clone();
        let u0_h = self.project_spatial(0, move |x, y| u0(x, y), extra_points);
        let u_d = self.project_faces(&data.dirichlet, FaceLabel::Dirichlet, extra_points);
        let u_n = self.project_faces(&data.neumann, FaceLabel::Neumann, extra_points);
        InterpolatedData { f_h, u0_h, u_d, u_n }
    }

    fn project_faces(
        &self,
        data: &Arc<dyn Fn(f64, f64, f64) -> StateValue + Send + Sync>,
        label: FaceLabel,
        extra_points: usize,
    ) -> FaceField {
        let nfaces = self.mesh.space.faces.len();
        let nslabs = self.mesh.num_slabs();
        let mut coeffs = vec![None; nfaces * nslabs];
        for (fid, face) in self.mesh.space.faces.iter().enumerate() {
            if face.label != label {
                continue;
            }
            for slab in 0..nslabs {
                let st = self.mesh.st_index(slab, face.owner);
                let (p, q) = self.degrees.get(st);
                let (t0, t1) = self.mesh.time.slab_bounds(slab);
                let tau = t1 - t0;
                let (s0, s1) = face.span;
                let len = s1 - s0;
                let t_rule = GaussRule::with_points(p + 1 + extra_points);
                let s_rule = GaussRule::with_points(q + 1 + extra_points);
                let t_tab = BasisTable::tabulate(p, &t_rule.points);
                let s_tab = BasisTable::tabulate(q, &s_rule.points);
                let mut out = vec![0.0; COMPONENTS * (p + 1) * (q + 1)];
                let scale = 1.0 / (tau * len).sqrt();
                for (it, &xt) in t_rule.points.iter().enumerate() {
                    let t = t0 + xt * tau;
                    for (is, &xs) in s_rule.points.iter().enumerate() {
                        let s = s0 + xs * len;
                        let (x, y) =
                            if face.axis == 0 { (face.position, s) } else { (s, face.position) };
                        let w = t_rule.weights[it] * tau * s_rule.weights[is] * len * scale;
                        let val = data(t, x, y);
                        for c in 0..COMPONENTS {
                            let vc = val.component(c) * w;
                            for m in 0..=p {
                                for nt in 0..=q {
                                    out[(c * (p + 1) + m) * (q + 1) + nt] +=
                                        vc * t_tab.val(m, it) * s_tab.val(nt, is);
                                }
                            }
                        }
                    }
                }
                coeffs[slab * nfaces + fid] = Some(out);
            }
        }
        FaceField { coeffs, nfaces }
    }
}
