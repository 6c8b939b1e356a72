//! PDE coefficients, the nonlinear operator `N`, the flux matrices and the
//! analytic problem data (manufactured solution, Gaussian bump excitation).
//!
//! The model is the first-order-in-time system for `u = (p, v)`:
//!
//! ```text
//! M ∂_t u + A u - D Δu + N(u, u) = f,
//! M = diag(α, ε, ε),  D = diag(β, ζ, ζ),  A u = (∇·v, ∇p),
//! N(u, z) = ( γ z_p ∇·u_v + δ ∇u_p · z_v ,  η (∇u_v)ᵀ z_v - θ z_p ∇u_p ).
//! ```
//!
//! Everything here is a pure function of its arguments; the spatial dimension
//! is fixed to d = 2.

use nalgebra::{Matrix3, Vector2};
use std::f64::consts::{E, PI};
use std::sync::Arc;
use thiserror::Error;

/// Spatial dimension of the model.
pub const DIM: usize = 2;
/// Number of solution components (pressure + velocity).
pub const COMPONENTS: usize = 1 + DIM;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model parameter `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("model parameters require gamma != delta")]
    GammaEqualsDelta,
    #[error("interior penalty variant theta_ip must be one of 1, -1, 0 (got {0})")]
    BadThetaIp(i8),
    #[error("normal vector is not unit length (|n| = {0})")]
    NonUnitNormal(f64),
}

/// The eight PDE coefficients plus penalty and flux configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub eta: f64,
    pub theta: f64,
    /// Penalty constant `C_σ` in `σ_{F,h} = C_σ / h_F`.
    pub c_sigma: f64,
    /// Interior penalty variant `Θ ∈ {1, -1, 0}` (symmetric / asymmetric /
    /// incomplete).
    pub theta_ip: i8,
}

impl ModelParams {
    /// Nondimensional soft-tissue parameters used in the experiments:
    /// `α = ε = δ = η = θ = 1`, `β = ζ = 1e-4`, `γ = 6`, with `C_σ = 50`
    /// and the symmetric interior penalty variant.
    pub fn soft_tissue() -> Self {
        Self {
            alpha: 1.0,
            beta: 1e-4,
            gamma: 6.0,
            delta: 1.0,
            epsilon: 1.0,
            zeta: 1e-4,
            eta: 1.0,
            theta: 1.0,
            c_sigma: 50.0,
            theta_ip: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let checks = [
            (self.alpha, "alpha"),
            (self.beta, "beta"),
            (self.gamma, "gamma"),
            (self.delta, "delta"),
            (self.epsilon, "epsilon"),
            (self.zeta, "zeta"),
            (self.eta, "eta"),
            (self.theta, "theta"),
            (self.c_sigma, "c_sigma"),
        ];
        for (value, name) in checks {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositive(name));
            }
        }
        if self.gamma == self.delta {
            return Err(ModelError::GammaEqualsDelta);
        }
        if !matches!(self.theta_ip, 1 | -1 | 0) {
            return Err(ModelError::BadThetaIp(self.theta_ip));
        }
        Ok(())
    }

    /// Copy with the four nonlinearity coefficients zeroed, for the linear
    /// comparison runs. The result intentionally violates `validate()`; it is
    /// only used together with the explicit linear-mode flag.
    pub fn linearized(&self) -> Self {
        Self {
            gamma: 0.0,
            delta: 0.0,
            eta: 0.0,
            theta: 0.0,
            ..*self
        }
    }

    /// Diagonal of `M = diag(α, ε, ε)` by component.
    #[inline]
    pub fn mass_diag(&self, component: usize) -> f64 {
        if component == 0 {
            self.alpha
        } else {
            self.epsilon
        }
    }

    /// Diagonal of `D = diag(β, ζ, ζ)` by component.
    #[inline]
    pub fn diffusion_diag(&self, component: usize) -> f64 {
        if component == 0 {
            self.beta
        } else {
            self.zeta
        }
    }

    /// Acoustic impedance `Z₀ = √(ε/α)`.
    #[inline]
    pub fn impedance(&self) -> f64 {
        (self.epsilon / self.alpha).sqrt()
    }
}

/// Pointwise solution value `(p, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateValue {
    pub p: f64,
    pub v: [f64; DIM],
}

impl StateValue {
    pub const ZERO: Self = Self { p: 0.0, v: [0.0; DIM] };

    #[inline]
    pub fn new(p: f64, vx: f64, vy: f64) -> Self {
        Self { p, v: [vx, vy] }
    }

    #[inline]
    pub fn component(&self, c: usize) -> f64 {
        match c {
            0 => self.p,
            1 => self.v[0],
            2 => self.v[1],
            _ => unreachable!("component index out of range"),
        }
    }

    #[inline]
    pub fn as_array(&self) -> [f64; COMPONENTS] {
        [self.p, self.v[0], self.v[1]]
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.p, s * self.v[0], s * self.v[1])
    }

    #[inline]
    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.p + other.p, self.v[0] + other.v[0], self.v[1] + other.v[1])
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        (self.p * self.p + self.v[0] * self.v[0] + self.v[1] * self.v[1]).sqrt()
    }
}

/// Pointwise spatial first derivatives: `grad_p[i] = ∂_i p` and
/// `grad_v[i][j] = ∂_j v_i` (Jacobian rows are gradients of components).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateGradient {
    pub grad_p: [f64; DIM],
    pub grad_v: [[f64; DIM]; DIM],
}

impl StateGradient {
    pub const ZERO: Self = Self { grad_p: [0.0; DIM], grad_v: [[0.0; DIM]; DIM] };

    /// `∇·v = ∂_x v_x + ∂_y v_y`.
    #[inline]
    pub fn div_v(&self) -> f64 {
        self.grad_v[0][0] + self.grad_v[1][1]
    }
}

/// Value plus gradient at a point; the argument type of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StatePoint {
    pub value: StateValue,
    pub grad: StateGradient,
}

/// The bilinear nonlinearity
/// `N(u, z) = ( γ z_p ∇·u_v + δ ∇u_p · z_v , η (∇u_v)ᵀ z_v - θ z_p ∇u_p )`.
pub fn eval_n(u: &StatePoint, z: &StatePoint, params: &ModelParams) -> StateValue {
    let zp = z.value.p;
    let zv = z.value.v;
    let div_uv = u.grad.div_v();
    let gp = u.grad.grad_p;
    let gv = u.grad.grad_v;

    let first = params.gamma * zp * div_uv + params.delta * (gp[0] * zv[0] + gp[1] * zv[1]);
    // ((∇u_v)ᵀ z)_i = Σ_j z_j ∂_i v_j
    let mut out = [0.0; DIM];
    for i in 0..DIM {
        let jac_t = gv[0][i] * zv[0] + gv[1][i] * zv[1];
        out[i] = params.eta * jac_t - params.theta * zp * gp[i];
    }
    StateValue::new(first, out[0], out[1])
}

/// `N'(u; ũ) = N(u, ũ) + N(ũ, u)`, the Fréchet derivative of `u ↦ N(u, u)`
/// at `ũ` applied to `u`.
pub fn eval_n_prime(u: &StatePoint, tilde_u: &StatePoint, params: &ModelParams) -> StateValue {
    eval_n(u, tilde_u, params).add(&eval_n(tilde_u, u, params))
}

fn check_unit(normal: [f64; DIM]) -> Result<Vector2<f64>, ModelError> {
    let n = Vector2::new(normal[0], normal[1]);
    let len = n.norm();
    if (len - 1.0).abs() > 1e-12 {
        return Err(ModelError::NonUnitNormal(len));
    }
    Ok(n)
}

/// `A_n = n₁ A₁ + n₂ A₂ = [[0, nᵀ], [n, 0]]`.
pub fn flux_an(normal: [f64; DIM]) -> Result<Matrix3<f64>, ModelError> {
    let n = check_unit(normal)?;
    let mut m = Matrix3::zeros();
    m[(0, 1)] = n[0];
    m[(0, 2)] = n[1];
    m[(1, 0)] = n[0];
    m[(2, 0)] = n[1];
    Ok(m)
}

/// `A_D = ½ [[-1/Z₀, 0], [0, -Z₀ n nᵀ]]` with `Z₀ = √(ε/α)`.
pub fn flux_ad(normal: [f64; DIM], params: &ModelParams) -> Result<Matrix3<f64>, ModelError> {
    let n = check_unit(normal)?;
    let z0 = params.impedance();
    let mut m = Matrix3::zeros();
    m[(0, 0)] = -0.5 / z0;
    for i in 0..DIM {
        for j in 0..DIM {
            m[(1 + i, 1 + j)] = -0.5 * z0 * n[i] * n[j];
        }
    }
    Ok(m)
}

/// Upwind flux matrix
/// `A_n^up = ½ [[-√(α/ε), nᵀ], [n, -√(ε/α) n nᵀ]] = A_D + ½ A_n`,
/// obtained from the incoming characteristic of the local Riemann problem.
pub fn flux_upwind(normal: [f64; DIM], params: &ModelParams) -> Result<Matrix3<f64>, ModelError> {
    let n = check_unit(normal)?;
    let z0 = params.impedance();
    let mut m = Matrix3::zeros();
    m[(0, 0)] = -0.5 / z0;
    for i in 0..DIM {
        m[(0, 1 + i)] = 0.5 * n[i];
        m[(1 + i, 0)] = 0.5 * n[i];
        for j in 0..DIM {
            m[(1 + i, 1 + j)] = -0.5 * z0 * n[i] * n[j];
        }
    }
    Ok(m)
}

/// `√(-A_D) = 2^{-1/2} [[Z₀^{-1/2}, 0], [0, Z₀^{1/2} n nᵀ]]`.
pub fn flux_sqrt_neg_ad(
    normal: [f64; DIM],
    params: &ModelParams,
) -> Result<Matrix3<f64>, ModelError> {
    let n = check_unit(normal)?;
    let z0 = params.impedance();
    let s = 0.5f64.sqrt();
    let mut m = Matrix3::zeros();
    m[(0, 0)] = s / z0.sqrt();
    for i in 0..DIM {
        for j in 0..DIM {
            m[(1 + i, 1 + j)] = s * z0.sqrt() * n[i] * n[j];
        }
    }
    Ok(m)
}

/// Configuration of the known solution `u = (∂_t ψ, ∇ψ)` with
/// `ψ = ψ_A sin(φ t) sin(k x) sin(k y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCfg {
    pub psi_a: f64,
    pub phi: f64,
    pub k: f64,
}

impl Default for ManufacturedCfg {
    /// `ψ_A = 0.01`, `φ = 6π`, `k = π`.
    fn default() -> Self {
        Self { psi_a: 0.01, phi: 6.0 * PI, k: PI }
    }
}

/// Value, spatial gradient, time derivative and component Laplacians of the
/// manufactured solution at a space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedPoint {
    pub value: StateValue,
    pub grad: StateGradient,
    pub dt: StateValue,
    pub laplacian: StateValue,
}

impl ManufacturedPoint {
    #[inline]
    pub fn state(&self) -> StatePoint {
        StatePoint { value: self.value, grad: self.grad }
    }
}

/// Evaluate the manufactured solution and all derivatives needed by the
/// source construction, analytically.
pub fn manufactured_solution(t: f64, x: f64, y: f64, cfg: &ManufacturedCfg) -> ManufacturedPoint {
    let (a, phi, k) = (cfg.psi_a, cfg.phi, cfg.k);
    let (s_t, c_t) = (phi * t).sin_cos();
    let (s_x, c_x) = (k * x).sin_cos();
    let (s_y, c_y) = (k * y).sin_cos();

    // ψ = a s_t s_x s_y
    let u_p = a * phi * c_t * s_x * s_y;
    let u_vx = a * k * s_t * c_x * s_y;
    let u_vy = a * k * s_t * s_x * c_y;

    let grad_p = [a * phi * k * c_t * c_x * s_y, a * phi * k * c_t * s_x * c_y];
    let grad_v = [
        [-a * k * k * s_t * s_x * s_y, a * k * k * s_t * c_x * c_y],
        [a * k * k * s_t * c_x * c_y, -a * k * k * s_t * s_x * s_y],
    ];

    let dt = StateValue::new(
        -a * phi * phi * s_t * s_x * s_y,
        a * k * phi * c_t * c_x * s_y,
        a * k * phi * c_t * s_x * c_y,
    );
    // Each component is a product of one-dimensional sines/cosines in x and
    // y, so Δ acts as multiplication by -2k².
    let laplacian = StateValue::new(-2.0 * k * k * u_p, -2.0 * k * k * u_vx, -2.0 * k * k * u_vy);

    ManufacturedPoint {
        value: StateValue::new(u_p, u_vx, u_vy),
        grad: StateGradient { grad_p, grad_v },
        dt,
        laplacian,
    }
}

/// The source `f = M ∂_t u + A u - D Δu + N(u, u)` for the manufactured
/// solution, evaluated in closed form so that `u` solves the model exactly.
pub fn manufactured_source(
    t: f64,
    x: f64,
    y: f64,
    params: &ModelParams,
    cfg: &ManufacturedCfg,
) -> StateValue {
    let pt = manufactured_solution(t, x, y, cfg);
    let nl = eval_n(&pt.state(), &pt.state(), params);
    let div_v = pt.grad.div_v();
    let f_p = params.alpha * pt.dt.p + div_v - params.beta * pt.laplacian.p + nl.p;
    let f_vx = params.epsilon * pt.dt.v[0] + pt.grad.grad_p[0] - params.zeta * pt.laplacian.v[0]
        + nl.v[0];
    let f_vy = params.epsilon * pt.dt.v[1] + pt.grad.grad_p[1] - params.zeta * pt.laplacian.v[1]
        + nl.v[1];
    StateValue::new(f_p, f_vx, f_vy)
}

/// Configuration of the Gaussian bump excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpCfg {
    pub a: f64,
    pub a_f: f64,
    pub r_a: f64,
}

impl Default for BumpCfg {
    /// `a = 2`, `a_f = 3`, `r_a = 0.2`.
    fn default() -> Self {
        Self { a: 2.0, a_f: 3.0, r_a: 0.2 }
    }
}

/// Pressure source
/// `p_S = a e sin(2π a_f t) exp(-1 / (1 - (x² + y²)/r_a²))` inside the disc
/// `x² + y² < r_a²` and zero outside; the velocity source is identically 0.
pub fn bump_source(t: f64, x: f64, y: f64, cfg: &BumpCfg) -> f64 {
    let r2 = (x * x + y * y) / (cfg.r_a * cfg.r_a);
    if r2 < 1.0 {
        cfg.a * E * (2.0 * PI * cfg.a_f * t).sin() * (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

type SpaceTimeFn = dyn Fn(f64, f64, f64) -> StateValue + Send + Sync;
type SpatialFn = dyn Fn(f64, f64) -> StateValue + Send + Sync;

/// Analytic problem data: volume source `f`, initial value `u₀`, Dirichlet
/// trace `u_D` and Neumann data `u_N = (p_N, v_N)`.
#[derive(Clone)]
pub struct ProblemData {
    pub source: Arc<SpaceTimeFn>,
    pub initial: Arc<SpatialFn>,
    pub dirichlet: Arc<SpaceTimeFn>,
    pub neumann: Arc<SpaceTimeFn>,
}

impl ProblemData {
    pub fn zero() -> Self {
        Self {
            source: Arc::new(|_, _, _| StateValue::ZERO),
            initial: Arc::new(|_, _| StateValue::ZERO),
            dirichlet: Arc::new(|_, _, _| StateValue::ZERO),
            neumann: Arc::new(|_, _, _| StateValue::ZERO),
        }
    }

    /// Data reproducing the manufactured solution: source from
    /// [`manufactured_source`], initial and Dirichlet data from the traces
    /// of the known solution, no Neumann boundary.
    pub fn manufactured(params: ModelParams, cfg: ManufacturedCfg) -> Self {
        Self {
            source: Arc::new(move |t, x, y| manufactured_source(t, x, y, &params, &cfg)),
            initial: Arc::new(move |x, y| manufactured_solution(0.0, x, y, &cfg).value),
            dirichlet: Arc::new(move |t, x, y| manufactured_solution(t, x, y, &cfg).value),
            neumann: Arc::new(|_, _, _| StateValue::ZERO),
        }
    }

    /// Gaussian bump excitation with homogeneous initial and boundary data.
    pub fn bump(cfg: BumpCfg) -> Self {
        Self {
            source: Arc::new(move |t, x, y| StateValue::new(bump_source(t, x, y, &cfg), 0.0, 0.0)),
            initial: Arc::new(|_, _| StateValue::ZERO),
            dirichlet: Arc::new(|_, _, _| StateValue::ZERO),
            neumann: Arc::new(|_, _, _| StateValue::ZERO),
        }
    }
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData").finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_point(rng: &mut StdRng) -> StatePoint {
        let mut val = || rng.gen_range(-1.0..1.0);
        StatePoint {
            value: StateValue::new(val(), val(), val()),
            grad: StateGradient {
                grad_p: [val(), val()],
                grad_v: [[val(), val()], [val(), val()]],
            },
        }
    }

    fn test_params() -> ModelParams {
        ModelParams { gamma: 6.0, ..ModelParams::soft_tissue() }
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::soft_tissue().validate().is_ok());
        let mut p = ModelParams::soft_tissue();
        p.delta = p.gamma;
        assert!(matches!(p.validate(), Err(ModelError::GammaEqualsDelta)));
        let mut p = ModelParams::soft_tissue();
        p.theta_ip = 2;
        assert!(matches!(p.validate(), Err(ModelError::BadThetaIp(2))));
        let mut p = ModelParams::soft_tissue();
        p.beta = 0.0;
        assert!(matches!(p.validate(), Err(ModelError::NonPositive("beta"))));
    }

    #[test]
    fn eval_n_direct_substitution() {
        // u_p = x, u_v = (x, 0), z = (1, (1, 0)) with γ=6, δ=η=θ=1:
        // N = (6·1·1 + 1·1·1, 1·1·1 - 1·1·1, 0) = (7, 0, 0).
        let params = ModelParams {
            gamma: 6.0,
            delta: 1.0,
            eta: 1.0,
            theta: 1.0,
            ..ModelParams::soft_tissue()
        };
        let u = StatePoint {
            value: StateValue::new(0.3, 0.3, 0.0), // values at x=0.3, irrelevant below
            grad: StateGradient { grad_p: [1.0, 0.0], grad_v: [[1.0, 0.0], [0.0, 0.0]] },
        };
        let z = StatePoint {
            value: StateValue::new(1.0, 1.0, 0.0),
            grad: StateGradient::ZERO,
        };
        let n = eval_n(&u, &z, &params);
        assert!((n.p - 7.0).abs() < 1e-15);
        // second component: η (∇u_v)ᵀ z = (z_x ∂_x v_x, 0) = (1, 0); -θ z_p ∇u_p = (-1, 0)
        assert!(n.v[0].abs() < 1e-15);
        assert!(n.v[1].abs() < 1e-15);
    }

    #[test]
    fn eval_n_zero_second_slot() {
        let mut rng = StdRng::seed_from_u64(7);
        let u = random_point(&mut rng);
        let n = eval_n(&u, &StatePoint::default(), &test_params());
        assert_eq!(n, StateValue::ZERO);
    }

    #[test]
    fn eval_n_half_identity() {
        // N(u, u) = ½ N'(u; u) pointwise.
        let params = test_params();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let u = random_point(&mut rng);
            let lhs = eval_n(&u, &u, &params);
            let rhs = eval_n_prime(&u, &u, &params).scale(0.5);
            for c in 0..COMPONENTS {
                assert!((lhs.component(c) - rhs.component(c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eval_n_prime_matches_sum() {
        let params = test_params();
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..50 {
            let u = random_point(&mut rng);
            let w = random_point(&mut rng);
            let direct = eval_n_prime(&u, &w, &params);
            let sum = eval_n(&u, &w, &params).add(&eval_n(&w, &u, &params));
            for c in 0..COMPONENTS {
                assert!((direct.component(c) - sum.component(c)).abs() < 1e-15);
            }
            // ũ = 0 and u = ũ special cases
            let z = eval_n_prime(&u, &StatePoint::default(), &params);
            assert_eq!(z, StateValue::ZERO);
            let twice = eval_n_prime(&u, &u, &params);
            let n2 = eval_n(&u, &u, &params).scale(2.0);
            for c in 0..COMPONENTS {
                assert!((twice.component(c) - n2.component(c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eval_n_bilinear() {
        let params = test_params();
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..50 {
            let u = random_point(&mut rng);
            let w = random_point(&mut rng);
            let z = random_point(&mut rng);
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            // first slot
            let mut combo = StatePoint::default();
            combo.value.p = a * u.value.p + b * w.value.p;
            for i in 0..DIM {
                combo.value.v[i] = a * u.value.v[i] + b * w.value.v[i];
                combo.grad.grad_p[i] = a * u.grad.grad_p[i] + b * w.grad.grad_p[i];
                for j in 0..DIM {
                    combo.grad.grad_v[i][j] = a * u.grad.grad_v[i][j] + b * w.grad.grad_v[i][j];
                }
            }
            let lhs = eval_n(&combo, &z, &params);
            let rhs = eval_n(&u, &z, &params).scale(a).add(&eval_n(&w, &z, &params).scale(b));
            let scale = lhs.norm().max(1.0);
            for c in 0..COMPONENTS {
                assert!((lhs.component(c) - rhs.component(c)).abs() / scale < 1e-13);
            }
            let lhs2 = eval_n(&z, &combo, &params);
            let rhs2 = eval_n(&z, &u, &params).scale(a).add(&eval_n(&z, &w, &params).scale(b));
            let scale2 = lhs2.norm().max(1.0);
            for c in 0..COMPONENTS {
                assert!((lhs2.component(c) - rhs2.component(c)).abs() / scale2 < 1e-13);
            }
        }
    }

    #[test]
    fn flux_matrices_printed_values() {
        let unit = ModelParams { alpha: 1.0, epsilon: 1.0, ..ModelParams::soft_tissue() };
        // A_n^up (1,0,0)ᵀ for n = (1, 0): ½(-1, 1, 0).
        let up = flux_upwind([1.0, 0.0], &unit).unwrap();
        let jump = nalgebra::Vector3::new(1.0, 0.0, 0.0);
        let r = up * jump;
        assert!((r[0] + 0.5).abs() < 1e-15 && (r[1] - 0.5).abs() < 1e-15 && r[2].abs() < 1e-15);

        // A_n((0,1)) first row = (0, 0, 1).
        let an = flux_an([0.0, 1.0]).unwrap();
        assert_eq!((an[(0, 0)], an[(0, 1)], an[(0, 2)]), (0.0, 0.0, 1.0));

        // A_D((1,0)) blocks at α=ε=1.
        let ad = flux_ad([1.0, 0.0], &unit).unwrap();
        assert!((ad[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((ad[(1, 1)] + 0.5).abs() < 1e-15);
        assert_eq!(ad[(2, 2)], 0.0);

        assert!(matches!(flux_upwind([0.5, 0.0], &unit), Err(ModelError::NonUnitNormal(_))));
    }

    #[test]
    fn flux_identities_random_normals() {
        let params = ModelParams { alpha: 2.0, epsilon: 0.5, ..ModelParams::soft_tissue() };
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let angle: f64 = rng.gen_range(0.0..2.0 * PI);
            let n = [angle.cos(), angle.sin()];
            let up = flux_upwind(n, &params).unwrap();
            let ad = flux_ad(n, &params).unwrap();
            let an = flux_an(n).unwrap();
            // A_n^up = A_D + ½ A_n, entrywise.
            let diff = up - (ad + an * 0.5);
            assert!(diff.amax() < 1e-15);
            // symmetry of A_n^up, A_D
            assert!((up - up.transpose()).amax() < 1e-15);
            // A_D negative semidefinite
            let eig = nalgebra::SymmetricEigen::new(ad);
            for ev in eig.eigenvalues.iter() {
                assert!(*ev <= 1e-14);
            }
            // √(-A_D) squared = -A_D
            let sq = flux_sqrt_neg_ad(n, &params).unwrap();
            assert!((sq * sq + ad).amax() < 1e-14);
        }
    }

    #[test]
    fn upwind_eigenvalues() {
        // -A_n^up has eigenvalues {0, 0, ½(Z₀ + 1/Z₀)}; equals {0, 0, 1} at Z₀ = 1.
        let unit = ModelParams { alpha: 1.0, epsilon: 1.0, ..ModelParams::soft_tissue() };
        let up = flux_upwind([1.0, 0.0], &unit).unwrap();
        let mut eig = nalgebra::SymmetricEigen::new(-up).eigenvalues.as_slice().to_vec();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(eig[0].abs() < 1e-12 && eig[1].abs() < 1e-12 && (eig[2] - 1.0).abs() < 1e-12);

        let params = ModelParams { alpha: 4.0, epsilon: 1.0, ..ModelParams::soft_tissue() };
        let z0 = params.impedance();
        let up = flux_upwind([0.6, 0.8], &params).unwrap();
        let mut eig = nalgebra::SymmetricEigen::new(-up).eigenvalues.as_slice().to_vec();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[2] - 0.5 * (z0 + 1.0 / z0)).abs() < 1e-12);
    }

    #[test]
    fn manufactured_initial_trace() {
        let cfg = ManufacturedCfg::default();
        assert!((cfg.psi_a - 0.01).abs() < 1e-15);
        assert!((cfg.phi - 6.0 * PI).abs() < 1e-13);
        assert!((cfg.k - PI).abs() < 1e-15);
        let pt = manufactured_solution(0.0, 0.3, 0.7, &cfg);
        let expect = cfg.psi_a * cfg.phi * (cfg.k * 0.3).sin() * (cfg.k * 0.7).sin();
        assert!((pt.value.p - expect).abs() < 1e-15);
        assert_eq!(pt.value.v, [0.0, 0.0]);
    }

    #[test]
    fn manufactured_derivatives_match_finite_differences() {
        let cfg = ManufacturedCfg::default();
        let (t, x, y) = (0.13, 0.25, 0.25);
        let h = 1e-5;
        let pt = manufactured_solution(t, x, y, &cfg);
        for c in 0..COMPONENTS {
            let dx = (manufactured_solution(t, x + h, y, &cfg).value.component(c)
                - manufactured_solution(t, x - h, y, &cfg).value.component(c))
                / (2.0 * h);
            let dy = (manufactured_solution(t, x, y + h, &cfg).value.component(c)
                - manufactured_solution(t, x, y - h, &cfg).value.component(c))
                / (2.0 * h);
            let dt = (manufactured_solution(t + h, x, y, &cfg).value.component(c)
                - manufactured_solution(t - h, x, y, &cfg).value.component(c))
                / (2.0 * h);
            let (gx, gy) = if c == 0 {
                (pt.grad.grad_p[0], pt.grad.grad_p[1])
            } else {
                (pt.grad.grad_v[c - 1][0], pt.grad.grad_v[c - 1][1])
            };
            assert!((dx - gx).abs() < 1e-8, "∂x component {c}");
            assert!((dy - gy).abs() < 1e-8, "∂y component {c}");
            assert!((dt - pt.dt.component(c)).abs() < 1e-7, "∂t component {c}");
        }
    }

    /// Finite-difference strong residual of the manufactured solution
    /// against the analytic source.
    fn fd_residual(t: f64, x: f64, y: f64, params: &ModelParams, cfg: &ManufacturedCfg) -> f64 {
        let h = 1e-4;
        let at = |t, x, y| manufactured_solution(t, x, y, cfg).value;
        let pt = manufactured_solution(t, x, y, cfg);
        let mut worst = 0.0f64;
        let f = manufactured_source(t, x, y, params, cfg);
        for c in 0..COMPONENTS {
            let dt = (at(t + h, x, y).component(c) - at(t - h, x, y).component(c)) / (2.0 * h);
            let lap = (at(t, x + h, y).component(c) + at(t, x - h, y).component(c)
                + at(t, x, y + h).component(c)
                + at(t, x, y - h).component(c)
                - 4.0 * at(t, x, y).component(c))
                / (h * h);
            let transport = if c == 0 {
                pt.grad.div_v()
            } else {
                pt.grad.grad_p[c - 1]
            };
            let nl = eval_n(&pt.state(), &pt.state(), params).component(c);
            let lhs = params.mass_diag(c) * dt + transport - params.diffusion_diag(c) * lap + nl;
            worst = worst.max((lhs - f.component(c)).abs());
        }
        worst
    }

    #[test]
    fn manufactured_source_fd_check_linear_part() {
        // γ=δ=η=θ=0 and β=ζ→0 limit: f reduces to M ∂_t u + A u.
        let mut params = ModelParams::soft_tissue().linearized();
        params.beta = 0.0;
        params.zeta = 0.0;
        let cfg = ManufacturedCfg::default();
        let (t, x, y) = (0.37, 0.21, 0.68);
        let pt = manufactured_solution(t, x, y, &cfg);
        let f = manufactured_source(t, x, y, &params, &cfg);
        let h = 1e-5;
        let at = |t, x, y| manufactured_solution(t, x, y, &cfg).value;
        let dtp = (at(t + h, x, y).p - at(t - h, x, y).p) / (2.0 * h);
        assert!((f.p - (params.alpha * dtp + pt.grad.div_v())).abs() < 1e-8);
        for i in 0..DIM {
            let dtv = (at(t + h, x, y).v[i] - at(t - h, x, y).v[i]) / (2.0 * h);
            assert!((f.v[i] - (params.epsilon * dtv + pt.grad.grad_p[i])).abs() < 1e-7);
        }
    }

    #[test]
    fn manufactured_source_full_fd_check() {
        let params = test_params();
        let cfg = ManufacturedCfg::default();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..20 {
            let t = rng.gen_range(0.05..0.95);
            let x = rng.gen_range(0.05..0.95);
            let y = rng.gen_range(0.05..0.95);
            assert!(fd_residual(t, x, y, &params, &cfg) < 1e-5);
        }
    }

    #[test]
    fn manufactured_source_at_degenerate_point() {
        // At t = 0, x = 0: all terms vanish except ε ∂_t v_x + ∂_x p, giving
        // f = (0, ψ_A φ k (1 + ε) sin(k y), 0).
        let params = test_params();
        let cfg = ManufacturedCfg::default();
        let y = 0.61;
        let f = manufactured_source(0.0, 0.0, y, &params, &cfg);
        let expect = cfg.psi_a * cfg.phi * cfg.k * (1.0 + params.epsilon) * (cfg.k * y).sin();
        assert!(f.p.abs() < 1e-14);
        assert!((f.v[0] - expect).abs() < 1e-12);
        assert!(f.v[1].abs() < 1e-14);
    }

    #[test]
    fn manufactured_source_nonlinear_scaling() {
        // Linear-in-u terms scale with ψ_A, the N contribution quadratically:
        // f(2ψ_A) - 2 f(ψ_A) = 2 N(u(ψ_A), u(ψ_A)).
        let params = test_params();
        let cfg = ManufacturedCfg::default();
        let cfg2 = ManufacturedCfg { psi_a: 2.0 * cfg.psi_a, ..cfg };
        let (t, x, y) = (0.41, 0.33, 0.77);
        let f1 = manufactured_source(t, x, y, &params, &cfg);
        let f2 = manufactured_source(t, x, y, &params, &cfg2);
        let u = manufactured_solution(t, x, y, &cfg).state();
        let nl = eval_n(&u, &u, &params);
        for c in 0..COMPONENTS {
            let got = f2.component(c) - 2.0 * f1.component(c);
            assert!((got - 2.0 * nl.component(c)).abs() < 1e-13);
        }
    }

    #[test]
    fn bump_source_values() {
        let cfg = BumpCfg::default();
        assert_eq!((cfg.a, cfg.a_f, cfg.r_a), (2.0, 3.0, 0.2));
        // outside (and on) the rim: zero
        assert_eq!(bump_source(0.1, 0.2, 0.0, &cfg), 0.0);
        assert_eq!(bump_source(0.1, 0.15, 0.15, &cfg), 0.0);
        // at the origin with sin(2π a_f t) = 1: a·e·exp(-1) = a
        let t_peak = 0.25 / cfg.a_f;
        assert!((bump_source(t_peak, 0.0, 0.0, &cfg) - cfg.a).abs() < 1e-12);
    }
}
