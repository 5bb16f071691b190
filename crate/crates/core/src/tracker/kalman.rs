use nalgebra::{SMatrix, SVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KalmanError {
    #[error("cannot predict backwards in time (dt = {0})")]
    NegativeDt(f64),
    #[error("innovation covariance is singular")]
    SingularInnovation,
}

/// Linear-Gaussian system with `N` states, `M` observations and `C` controls.
pub trait KalmanModel<const N: usize, const M: usize, const C: usize> {
    fn transition(&self, dt: f64) -> SMatrix<f64, N, N>;
    fn process_noise(&self, dt: f64) -> SMatrix<f64, N, N>;
    fn observation(&self) -> SMatrix<f64, M, N>;
    fn observation_noise(&self) -> SMatrix<f64, M, M>;

    fn control_input(&self, _dt: f64) -> SMatrix<f64, N, C> {
        SMatrix::zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState<const N: usize> {
    pub x: SVector<f64, N>,
    pub p: SMatrix<f64, N, N>,
    /// Time the estimate refers to, s.
    pub t: f64,
}

impl<const N: usize> KalmanState<N> {
    pub fn new(x: SVector<f64, N>, p: SMatrix<f64, N, N>, t: f64) -> Self {
        Self { x, p, t }
    }
}

pub fn kalman_predict<K, const N: usize, const M: usize, const C: usize>(
    state: &KalmanState<N>,
    model: &K,
    dt: f64,
    u: Option<&SVector<f64, C>>,
) -> Result<KalmanState<N>, KalmanError>
where
    K: KalmanModel<N, M, C>,
{
    if dt < 0.0 {
        return Err(KalmanError::NegativeDt(dt));
    }
    let f = model.transition(dt);
    let mut x = f * state.x;
    if let Some(u) = u {
        x += model.control_input(dt) * u;
    }
    let p = f * state.p * f.transpose() + model.process_noise(dt);
    Ok(KalmanState {
        x,
        p: symmetrize(p),
        t: state.t + dt,
    })
}

/// Gain that an update at `state` would apply.
pub fn kalman_gain<K, const N: usize, const M: usize, const C: usize>(
    state: &KalmanState<N>,
    model: &K,
) -> Result<SMatrix<f64, N, M>, KalmanError>
where
    K: KalmanModel<N, M, C>,
{
    let h = model.observation();
    let s = h * state.p * h.transpose() + model.observation_noise();
    let s_inv = s.try_inverse().ok_or(KalmanError::SingularInnovation)?;
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(KalmanError::SingularInnovation);
    }
    Ok(state.p * h.transpose() * s_inv)
}

pub fn kalman_update<K, const N: usize, const M: usize, const C: usize>(
    state: &KalmanState<N>,
    model: &K,
    z: &SVector<f64, M>,
) -> Result<KalmanState<N>, KalmanError>
where
    K: KalmanModel<N, M, C>,
{
    let innovation = z - model.observation() * state.x;
    update_with_innovation(state, model, &innovation)
}

/// Measurement update with a caller-supplied innovation, for observation
/// spaces (such as angles) where `z − Hx` needs wrapping.
pub fn update_with_innovation<K, const N: usize, const M: usize, const C: usize>(
    state: &KalmanState<N>,
    model: &K,
    innovation: &SVector<f64, M>,
) -> Result<KalmanState<N>, KalmanError>
where
    K: KalmanModel<N, M, C>,
{
    let k = kalman_gain(state, model)?;
    let h = model.observation();
    let i_kh = SMatrix::<f64, N, N>::identity() - k * h;
    // Joseph form keeps P symmetric PSD under rounding.
    let p = i_kh * state.p * i_kh.transpose() + k * model.observation_noise() * k.transpose();
    Ok(KalmanState {
        x: state.x + k * innovation,
        p: symmetrize(p),
        t: state.t,
    })
}

fn symmetrize<const N: usize>(p: SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (p + p.transpose()) * 0.5
}

/// Planar constant-velocity model over `[px, py, vx, vy]` observing position.
/// Process noise is a piecewise-constant white acceleration of standard
/// deviation `sigma_a` per step; controls are accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantVelocity {
    pub sigma_a: f64,
    pub sigma_z: f64,
}

impl KalmanModel<4, 2, 2> for ConstantVelocity {
    fn transition(&self, dt: f64) -> SMatrix<f64, 4, 4> {
        let mut f = SMatrix::<f64, 4, 4>::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        f
    }

    fn process_noise(&self, dt: f64) -> SMatrix<f64, 4, 4> {
        let q = self.sigma_a * self.sigma_a;
        let (pp, pv, vv) = (dt.powi(4) / 4.0 * q, dt.powi(3) / 2.0 * q, dt * dt * q);
        let mut m = SMatrix::<f64, 4, 4>::zeros();
        for i in 0..2 {
            m[(i, i)] = pp;
            m[(i, i + 2)] = pv;
            m[(i + 2, i)] = pv;
            m[(i + 2, i + 2)] = vv;
        }
        m
    }

    fn observation(&self) -> SMatrix<f64, 2, 4> {
        SMatrix::<f64, 2, 4>::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    }

    fn observation_noise(&self) -> SMatrix<f64, 2, 2> {
        SMatrix::<f64, 2, 2>::identity() * (self.sigma_z * self.sigma_z)
    }

    fn control_input(&self, dt: f64) -> SMatrix<f64, 4, 2> {
        SMatrix::<f64, 4, 2>::new(0.5 * dt * dt, 0.0, 0.0, 0.5 * dt * dt, dt, 0.0, 0.0, dt)
    }
}

/// Scalar random-walk heading filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingModel {
    /// Heading diffusion, rad/√s.
    pub sigma_w: f64,
    /// Measurement noise, rad.
    pub sigma_z: f64,
}

impl KalmanModel<1, 1, 1> for HeadingModel {
    fn transition(&self, _dt: f64) -> SMatrix<f64, 1, 1> {
        SMatrix::identity()
    }

    fn process_noise(&self, dt: f64) -> SMatrix<f64, 1, 1> {
        SMatrix::from_element(self.sigma_w * self.sigma_w * dt)
    }

    fn observation(&self) -> SMatrix<f64, 1, 1> {
        SMatrix::identity()
    }

    fn observation_noise(&self) -> SMatrix<f64, 1, 1> {
        SMatrix::from_element(self.sigma_z * self.sigma_z)
    }
}

/// Time-invariant model with explicit matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedModel<const N: usize, const M: usize, const C: usize> {
    pub f: SMatrix<f64, N, N>,
    pub q: SMatrix<f64, N, N>,
    pub h: SMatrix<f64, M, N>,
    pub r: SMatrix<f64, M, M>,
    pub b: SMatrix<f64, N, C>,
}

impl<const N: usize, const M: usize, const C: usize> KalmanModel<N, M, C> for FixedModel<N, M, C> {
    fn transition(&self, _dt: f64) -> SMatrix<f64, N, N> {
        self.f
    }
    fn process_noise(&self, _dt: f64) -> SMatrix<f64, N, N> {
        self.q
    }
    fn observation(&self) -> SMatrix<f64, M, N> {
        self.h
    }
    fn observation_noise(&self) -> SMatrix<f64, M, M> {
        self.r
    }
    fn control_input(&self, _dt: f64) -> SMatrix<f64, N, C> {
        self.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix4, Vector2, Vector4};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cv() -> ConstantVelocity {
        ConstantVelocity {
            sigma_a: 1000.0,
            sigma_z: 10.0,
        }
    }

    #[test]
    fn rest_is_fixed_point() {
        let m = ConstantVelocity {
            sigma_a: 0.0,
            sigma_z: 10.0,
        };
        let s = KalmanState::new(Vector4::zeros(), Matrix4::identity(), 0.0);
        let out = kalman_predict(&s, &m, 1.0, None).unwrap();
        assert_eq!(out.x, Vector4::zeros());
        assert_eq!(out.t, 1.0);
    }

    #[test]
    fn constant_velocity_propagation() {
        let s = KalmanState::new(Vector4::new(100.0, 0.0, 50.0, 0.0), Matrix4::identity(), 0.0);
        let out = kalman_predict(&s, &cv(), 2.0, None).unwrap();
        assert_eq!(out.x, Vector4::new(200.0, 0.0, 50.0, 0.0));
    }

    #[test]
    fn control_input_applies_acceleration() {
        let s = KalmanState::new(Vector4::zeros(), Matrix4::identity(), 0.0);
        let out = kalman_predict(&s, &cv(), 2.0, Some(&Vector2::new(10.0, 0.0))).unwrap();
        assert_eq!(out.x, Vector4::new(20.0, 0.0, 20.0, 0.0));
    }

    #[test]
    fn identity_propagation_adds_q() {
        let m = FixedModel::<3, 1, 1> {
            f: SMatrix::identity(),
            q: SMatrix::identity(),
            h: SMatrix::from_element(1.0),
            r: SMatrix::from_element(1.0),
            b: SMatrix::zeros(),
        };
        let s = KalmanState::new(SVector::<f64, 3>::zeros(), SMatrix::identity(), 0.0);
        let out = kalman_predict(&s, &m, 1.0, None).unwrap();
        assert_eq!(out.p, SMatrix::<f64, 3, 3>::identity() * 2.0);
    }

    #[test]
    fn negative_dt_rejected() {
        let s = KalmanState::new(Vector4::zeros(), Matrix4::identity(), 0.0);
        assert_eq!(
            kalman_predict(&s, &cv(), -0.1, None),
            Err(KalmanError::NegativeDt(-0.1))
        );
    }

    #[test]
    fn perfect_measurement_dominates() {
        let m = ConstantVelocity {
            sigma_a: 1000.0,
            sigma_z: 1e-6,
        };
        let s = KalmanState::new(Vector4::zeros(), Matrix4::identity() * 1e4, 0.0);
        let out = kalman_update(&s, &m, &Vector2::new(500.0, 300.0)).unwrap();
        assert_abs_diff_eq!(out.x[0], 500.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.x[1], 300.0, epsilon = 1e-6);
        assert!(out.p.trace() <= s.p.trace());
    }

    #[test]
    fn converges_without_process_noise() {
        let m = ConstantVelocity {
            sigma_a: 0.0,
            sigma_z: 1e-6,
        };
        let mut s = KalmanState::new(Vector4::new(0.0, 0.0, 300.0, -200.0), Matrix4::identity() * 1e4, 0.0);
        let z = Vector2::new(250.0, -40.0);
        for _ in 0..50 {
            s = kalman_predict(&s, &m, 1.0 / 60.0, None).unwrap();
            s = kalman_update(&s, &m, &z).unwrap();
        }
        assert_abs_diff_eq!(s.x[0], 250.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.x[1], -40.0, epsilon = 1e-6);
        assert!(s.x[2].abs() < 1e-3 && s.x[3].abs() < 1e-3);
    }

    #[test]
    fn scalar_steady_state_gain() {
        let (q, r) = (0.01, 1.0);
        // Oracle: iterate the variance recursion to its fixed point.
        let mut p = 1.0f64;
        let mut gain = 0.0;
        for _ in 0..10_000 {
            let prior = p + q;
            gain = prior / (prior + r);
            p = (1.0 - gain) * prior;
        }
        let m = FixedModel::<1, 1, 1> {
            f: SMatrix::identity(),
            q: SMatrix::from_element(q),
            h: SMatrix::identity(),
            r: SMatrix::from_element(r),
            b: SMatrix::zeros(),
        };
        let mut s = KalmanState::new(SVector::<f64, 1>::zeros(), SMatrix::from_element(1.0), 0.0);
        let mut k = 0.0;
        for _ in 0..10_000 {
            s = kalman_predict(&s, &m, 1.0, None).unwrap();
            k = kalman_gain(&s, &m).unwrap()[0];
            s = kalman_update(&s, &m, &SVector::<f64, 1>::from_element(0.0)).unwrap();
        }
        assert_abs_diff_eq!(k, gain, epsilon = 1e-9);
        // Closed form of the same fixed point: p⁻ = (q + √(q² + 4qr)) / 2.
        let prior = (q + (q * q + 4.0 * q * r).sqrt()) / 2.0;
        assert_abs_diff_eq!(gain, prior / (prior + r), epsilon = 1e-9);
    }

    #[test]
    fn singular_innovation() {
        let m = FixedModel::<1, 1, 1> {
            f: SMatrix::identity(),
            q: SMatrix::zeros(),
            h: SMatrix::identity(),
            r: SMatrix::zeros(),
            b: SMatrix::zeros(),
        };
        let s = KalmanState::new(SVector::<f64, 1>::zeros(), SMatrix::zeros(), 0.0);
        assert_eq!(
            kalman_update(&s, &m, &SVector::<f64, 1>::from_element(1.0)),
            Err(KalmanError::SingularInnovation)
        );
    }

    #[test]
    fn covariance_stays_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = cv();
        let mut s = KalmanState::new(Vector4::zeros(), Matrix4::identity() * 1e6, 0.0);
        for _ in 0..10_000 {
            let dt = rng.random_range(0.0..0.1);
            s = kalman_predict(&s, &m, dt, None).unwrap();
            if rng.random_bool(0.7) {
                let z = Vector2::new(rng.random_range(-6000.0..6000.0), rng.random_range(-4500.0..4500.0));
                s = kalman_update(&s, &m, &z).unwrap();
            }
            assert_eq!(s.p, s.p.transpose());
            let min = s.p.symmetric_eigenvalues().min();
            assert!(min >= -1e-9, "eigenvalue {min}");
        }
    }

    proptest! {
        #[test]
        fn update_shrinks_trace(
            p_diag in proptest::array::uniform4(1.0..1e6f64),
            zx in -5000.0..5000.0f64,
            zy in -5000.0..5000.0f64,
        ) {
            let s = KalmanState::new(Vector4::zeros(), Matrix4::from_diagonal(&Vector4::from(p_diag)), 0.0);
            let out = kalman_update(&s, &cv(), &Vector2::new(zx, zy)).unwrap();
            prop_assert!(out.p.trace() <= s.p.trace() + 1e-9);
        }
    }
}
