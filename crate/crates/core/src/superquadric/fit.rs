//! Superquadric recovery from surface points.
//!
//! The objective is
//!
//! ```text
//! L(θ) = mean_i radial(θ, xᵢ) + λ · mean_j |sdf(s_j(θ))|
//! ```
//!
//! where `s_j(θ)` are points on the superquadric surface and `sdf` is the
//! object's distance grid. The second term penalizes superquadric surface
//! that floats away from the mesh, which the data term alone never sees.
//!
//! Each start runs a bounded Levenberg-Marquardt on Huber pseudo-residuals
//! (quadratic below a small threshold, linear above, so the solver tracks the
//! mean absolute loss while keeping Gauss-Newton convergence near zero
//! residual). Jacobians are central differences. Starts are the tightest
//! box near the principal axes of the points under each axis permutation,
//! with exponents at 1.

use std::ops::Range;

use nalgebra::{
    Matrix3, Point3, Rotation3, SMatrix, SVector, SymmetricEigen, UnitQuaternion, Vector3,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    radial_residual, surface_coords, SqError, Superquadric, SuperquadricParams, SurfaceCoord,
    SurfaceSampling, EXPONENT_MAX, EXPONENT_MIN,
};
use crate::sdf::SdfGrid;

pub const SCALE_MIN: f64 = 1e-4;
pub const SCALE_MAX: f64 = 1.0;
/// Three scales, two exponents, translation, rotation.
pub const PARAMETER_COUNT: usize = 11;

/// Axis assignments tried by the starts: superquadric axis `k` takes the
/// principal axis `perm[k]`. The first three put each principal axis on z.
const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 2, 0],
    [2, 0, 1],
    [1, 0, 2],
    [2, 1, 0],
    [0, 2, 1],
];
/// Rotations of the minimum-volume box frame tried as start frames: the frame
/// itself and 45° about each of its axes. Diamond-like cross-sections fill
/// the diagonal box as tightly as square ones fill the aligned box.
const FRAME_TURNS: [Option<usize>; 4] = [None, Some(0), Some(1), Some(2)];
/// Initial exponents, cycled once every frame and permutation has a start.
const EXTRA_EXPONENTS: [f64; 3] = [1.0, 0.5, 1.5];
/// Iterations every start runs before the most promising ones continue.
const SCREEN_ITERS: usize = 25;
/// Starts that continue past screening.
const REFINED_STARTS: usize = 4;
/// Huber threshold as a fraction of the mean initial half-extent.
const HUBER_FRACTION: f64 = 1e-3;
const FD_STEP: f64 = 1e-6;
/// Mean squared pseudo-residual, relative to the squared size, at which a
/// fit counts as exact.
const EXACT_COST: f64 = 1e-20;

type Vector11 = SVector<f64, PARAMETER_COUNT>;
type Matrix11 = SMatrix<f64, PARAMETER_COUNT, PARAMETER_COUNT>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Weight of the surface-to-mesh regularizer. Both terms are in meters.
    pub lambda: f64,
    /// Superquadric surface samples per regularizer evaluation.
    pub n_surface_samples: usize,
    /// How the regularizer spreads its samples over the superquadric.
    pub reg_sampling: SurfaceSampling,
    pub n_starts: usize,
    pub max_iters: usize,
    /// Relative loss decrease under which a start stops.
    pub tol: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            n_surface_samples: 500,
            reg_sampling: SurfaceSampling::Radial,
            n_starts: 24,
            max_iters: 200,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), SqError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SqError::InvalidConfig(
                "lambda must be finite and non-negative",
            ));
        }
        if self.n_surface_samples == 0 || self.n_starts == 0 || self.max_iters == 0 {
            return Err(SqError::InvalidConfig(
                "sample, start and iteration counts must be at least 1",
            ));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(SqError::InvalidConfig("tol must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub superquadric: Superquadric,
    /// Mean radial distance of the input points (m).
    pub data_loss: f64,
    /// Mean |SDF| over superquadric surface samples (m); `None` without a grid.
    pub reg_loss: Option<f64>,
    /// `data_loss + λ · reg_loss`, the value starts are ranked by.
    pub loss: f64,
    pub converged: bool,
    pub start_index: usize,
    pub iterations: usize,
}

/// On-disk form of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    #[serde(flatten)]
    pub params: SuperquadricParams,
    pub data_loss: f64,
    pub reg_loss: Option<f64>,
    pub converged: bool,
    pub start_index: usize,
}

impl FitResult {
    pub fn record(&self) -> FitRecord {
        FitRecord {
            params: self.superquadric.params(),
            data_loss: self.data_loss,
            reg_loss: self.reg_loss,
            converged: self.converged,
            start_index: self.start_index,
        }
    }
}

impl FitRecord {
    pub fn superquadric(&self) -> Result<Superquadric, SqError> {
        Superquadric::try_from(self.params)
    }
}

/// Fits a superquadric to `points`. A grid is required when `lambda > 0`;
/// with `lambda = 0` it is only used to report `reg_loss`.
pub fn fit_superquadric(
    points: &[Point3<f64>],
    sdf: Option<&SdfGrid>,
    config: &FitConfig,
) -> Result<FitResult, SqError> {
    let starts = fit_superquadric_starts(points, sdf, config)?;
    Ok(starts
        .into_iter()
        .min_by(|a, b| {
            a.loss
                .total_cmp(&b.loss)
                .then(a.start_index.cmp(&b.start_index))
        })
        .expect("at least one start"))
}

/// Every start's final result, in start order.
pub fn fit_superquadric_starts(
    points: &[Point3<f64>],
    sdf: Option<&SdfGrid>,
    config: &FitConfig,
) -> Result<Vec<FitResult>, SqError> {
    config.validate()?;
    if points.len() < PARAMETER_COUNT {
        return Err(SqError::TooFewPoints {
            needed: PARAMETER_COUNT,
            got: points.len(),
        });
    }
    if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(SqError::NonFinitePoint(i));
    }
    if config.lambda > 0.0 && sdf.is_none() {
        return Err(SqError::MissingGrid(config.lambda));
    }

    let (inits, size) = initial_states(points, config.n_starts);
    let objective = Objective {
        points,
        grid: sdf,
        lambda: config.lambda,
        huber: HUBER_FRACTION * size,
        size,
    };

    let screen_iters = config.max_iters.min(SCREEN_ITERS);
    let mut runs: Vec<(State, usize, bool)> = inits
        .into_par_iter()
        .map(|init| objective.solve(init, config, 0..screen_iters))
        .collect();
    let screened: Vec<f64> = runs
        .par_iter()
        .map(|(state, _, _)| objective.loss(state, config))
        .collect();
    let mut pending: Vec<usize> = (0..runs.len())
        .filter(|&k| !runs[k].2 && screened[k].is_finite())
        .collect();
    pending.sort_by(|&a, &b| screened[a].total_cmp(&screened[b]).then(a.cmp(&b)));
    pending.truncate(REFINED_STARTS);
    let refined: Vec<(usize, (State, usize, bool))> = pending
        .into_par_iter()
        .map(|k| {
            (
                k,
                objective.solve(runs[k].0, config, screen_iters..config.max_iters),
            )
        })
        .collect();
    for (k, run) in refined {
        runs[k] = run;
    }

    runs.into_par_iter()
        .enumerate()
        .map(|(start, (state, iterations, converged))| {
            let superquadric = state.superquadric();
            let (data_loss, reg_loss) = objective.losses(&state, config);
            let loss = data_loss
                + if config.lambda > 0.0 {
                    config.lambda * reg_loss.unwrap_or(0.0)
                } else {
                    0.0
                };
            if !loss.is_finite() || reg_loss.is_some_and(|r| !r.is_finite()) {
                return Err(SqError::NonFiniteLoss { start });
            }
            Ok(FitResult {
                superquadric,
                data_loss,
                reg_loss,
                loss,
                converged,
                start_index: start,
                iterations,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct State {
    scale: Vector3<f64>,
    exponents: [f64; 2],
    position: Vector3<f64>,
    rotation: UnitQuaternion<f64>,
}

impl State {
    /// Applies a step in local coordinates, projected onto the bounds. The
    /// rotation part is a rotation vector in the body frame.
    fn step(&self, d: &Vector11) -> Self {
        let rotation_step = Vector3::new(d[8], d[9], d[10]);
        Self {
            scale: Vector3::new(d[0], d[1], d[2])
                .zip_map(&self.scale, |s, a| (a + s).clamp(SCALE_MIN, SCALE_MAX)),
            exponents: [0, 1]
                .map(|k| (self.exponents[k] + d[3 + k]).clamp(EXPONENT_MIN, EXPONENT_MAX)),
            position: self.position + Vector3::new(d[5], d[6], d[7]),
            rotation: self.rotation * UnitQuaternion::from_scaled_axis(rotation_step),
        }
    }

    /// Bounded coordinate `k` (scales and exponents) for measuring the
    /// actual finite-difference span.
    fn bounded_coordinate(&self, k: usize) -> Option<f64> {
        match k {
            0..=2 => Some(self.scale[k]),
            3 | 4 => Some(self.exponents[k - 3]),
            _ => None,
        }
    }

    fn superquadric(&self) -> Superquadric {
        Superquadric::new(
            self.scale,
            self.exponents,
            Point3::from(self.position),
            self.rotation,
        )
        .expect("fit state stays within bounds")
    }
}

struct Objective<'a> {
    points: &'a [Point3<f64>],
    grid: Option<&'a SdfGrid>,
    lambda: f64,
    huber: f64,
    /// Characteristic half-extent of the input, for step sizes and stopping.
    size: f64,
}

impl Objective<'_> {
    fn regularized(&self) -> bool {
        self.lambda > 0.0
    }

    /// Weighted pseudo-residuals whose squared norm is the Huber objective.
    fn residuals(&self, s: &State, coords: &[SurfaceCoord], out: &mut Vec<f64>) {
        out.clear();
        let rotation = s.rotation.to_rotation_matrix();
        let w_data = (1.0 / self.points.len() as f64).sqrt();
        for p in self.points {
            let x = rotation.inverse_transform_vector(&(p.coords - s.position));
            // At the center every direction is radial; any finite value keeps
            // the solver moving.
            let r = if x.norm() == 0.0 {
                -s.scale.min()
            } else {
                radial_residual(&s.scale, s.exponents, &x)
            };
            out.push(w_data * pseudo_huber(r, self.huber));
        }
        if let (true, Some(grid)) = (self.regularized(), self.grid) {
            let w_reg = (self.lambda / coords.len() as f64).sqrt();
            for c in coords {
                let q = s.position + rotation * c.canonical_point(&s.scale, s.exponents);
                out.push(w_reg * pseudo_huber(grid.query_point(&Point3::from(q)), self.huber));
            }
        }
    }

    fn cost(&self, s: &State, coords: &[SurfaceCoord], buffer: &mut Vec<f64>) -> f64 {
        self.residuals(s, coords, buffer);
        buffer.iter().map(|r| r * r).sum()
    }

    /// `JᵀJ` and `Jᵀr` from central differences around `s`.
    fn normal_equations(
        &self,
        s: &State,
        coords: &[SurfaceCoord],
        r: &[f64],
    ) -> (Matrix11, Vector11) {
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(PARAMETER_COUNT);
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for k in 0..PARAMETER_COUNT {
            let h = match k {
                0..=2 => FD_STEP * s.scale[k],
                3 | 4 => FD_STEP,
                5..=7 => FD_STEP * self.size,
                _ => FD_STEP,
            };
            let mut d = Vector11::zeros();
            d[k] = h;
            let (sp, sm) = (s.step(&d), s.step(&-d));
            let span = match (sp.bounded_coordinate(k), sm.bounded_coordinate(k)) {
                (Some(a), Some(b)) => a - b,
                _ => 2.0 * h,
            };
            if span == 0.0 {
                columns.push(vec![0.0; r.len()]);
                continue;
            }
            self.residuals(&sp, coords, &mut plus);
            self.residuals(&sm, coords, &mut minus);
            columns.push(
                plus.iter()
                    .zip(&minus)
                    .map(|(a, b)| (a - b) / span)
                    .collect(),
            );
        }

        let mut jtj = Matrix11::zeros();
        let mut jtr = Vector11::zeros();
        for a in 0..PARAMETER_COUNT {
            jtr[a] = dot(&columns[a], r);
            for b in a..PARAMETER_COUNT {
                let v = dot(&columns[a], &columns[b]);
                jtj[(a, b)] = v;
                jtj[(b, a)] = v;
            }
        }
        (jtj, jtr)
    }

    /// Levenberg-Marquardt from `init` over the iteration numbers `iters`,
    /// which also seed the regularizer samples. Returns the final state, the
    /// iteration count so far and whether a stopping criterion (rather than
    /// the budget) ended it.
    fn solve(&self, init: State, config: &FitConfig, iters: Range<usize>) -> (State, usize, bool) {
        let mut state = init;
        let mut damping = 1e-3;
        let (mut r, mut scratch) = (Vec::new(), Vec::new());
        let exact = EXACT_COST * self.size * self.size;

        let end = iters.end;
        for iter in iters {
            // Fresh samples each iteration; a step is judged on the samples it
            // was computed with.
            let coords = if self.regularized() {
                let seed = config.seed.wrapping_add(iter as u64 + 1);
                surface_coords(
                    config.reg_sampling,
                    &state.scale,
                    config.n_surface_samples,
                    seed,
                )
            } else {
                Vec::new()
            };
            let cost = self.cost(&state, &coords, &mut r);
            if !cost.is_finite() {
                return (state, iter, false);
            }
            if cost <= exact {
                return (state, iter, true);
            }
            let (jtj, jtr) = self.normal_equations(&state, &coords, &r);
            let diag_floor = 1e-12 * jtj.diagonal().max().max(f64::MIN_POSITIVE);

            let mut accepted = None;
            while damping <= 1e15 {
                let mut a = jtj;
                for k in 0..PARAMETER_COUNT {
                    a[(k, k)] += damping * jtj[(k, k)].max(diag_floor);
                }
                let Some(step) = a.cholesky().map(|c| c.solve(&-jtr)) else {
                    damping *= 4.0;
                    continue;
                };
                let trial = state.step(&step);
                let trial_cost = self.cost(&trial, &coords, &mut scratch);
                if trial_cost < cost {
                    accepted = Some((trial, trial_cost));
                    damping = (damping / 3.0).max(1e-15);
                    break;
                }
                damping *= 4.0;
            }
            // No damping yields descent: a stationary point of the bounded problem.
            let Some((trial, trial_cost)) = accepted else {
                return (state, iter + 1, true);
            };
            state = trial;
            if cost - trial_cost <= config.tol * cost {
                return (state, iter + 1, true);
            }
        }
        (state, end, false)
    }

    fn loss(&self, s: &State, config: &FitConfig) -> f64 {
        let (data, reg) = self.losses(s, config);
        data + config.lambda * reg.unwrap_or(0.0)
    }

    /// Unweighted mean absolute losses, the regularizer on samples drawn
    /// with the configured seed.
    fn losses(&self, s: &State, config: &FitConfig) -> (f64, Option<f64>) {
        let sq = s.superquadric();
        let data = self
            .points
            .iter()
            .map(|p| {
                let x = sq.to_local(p);
                if x.norm() == 0.0 {
                    s.scale.min()
                } else {
                    radial_residual(&s.scale, s.exponents, &x).abs()
                }
            })
            .sum::<f64>()
            / self.points.len() as f64;
        let reg = self.grid.map(|grid| {
            let samples =
                sq.sample_surface_with(config.reg_sampling, config.n_surface_samples, config.seed);
            grid.query(&samples).iter().map(|d| d.abs()).sum::<f64>() / samples.len() as f64
        });
        (data, reg)
    }
}

/// Signed square root of twice the Huber loss: quadratic objective below
/// `delta`, linear above, continuously differentiable.
fn pseudo_huber(r: f64, delta: f64) -> f64 {
    if r.abs() <= delta {
        r
    } else {
        r.signum() * (delta * (2.0 * r.abs() - delta)).sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bounding boxes of the point cloud in each start frame, under each axis
/// permutation. Also returns the mean half-extent of the tightest box.
fn initial_states(points: &[Point3<f64>], n_starts: usize) -> (Vec<State>, f64) {
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let covariance = points
        .iter()
        .map(|p| (p.coords - mean) * (p.coords - mean).transpose())
        .sum::<Matrix3<f64>>()
        / n;
    let eigen = SymmetricEigen::new(covariance);
    let frame = tighten_frame(
        points,
        &mean,
        Rotation3::from_matrix_unchecked(eigen.eigenvectors),
    );
    let boxes = FRAME_TURNS.map(|turn| {
        let turned = match turn {
            None => frame,
            Some(k) => {
                frame * Rotation3::from_scaled_axis(Vector3::ith(k, std::f64::consts::FRAC_PI_4))
            }
        };
        frame_box(points, &mean, &turned)
    });
    let size = boxes[0].2.iter().sum::<f64>() / 3.0;

    let per_exponent = PERMUTATIONS.len() * FRAME_TURNS.len();
    let states = (0..n_starts)
        .map(|start| {
            let (center, axes, half) = &boxes[(start / PERMUTATIONS.len()) % FRAME_TURNS.len()];
            let perm = PERMUTATIONS[start % PERMUTATIONS.len()];
            let mut columns = perm.map(|k| axes[k]);
            if columns[0].cross(&columns[1]).dot(&columns[2]) < 0.0 {
                columns[2] = -columns[2];
            }
            let rotation = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&columns));
            let e = EXTRA_EXPONENTS[(start / per_exponent) % EXTRA_EXPONENTS.len()];
            State {
                scale: Vector3::new(half[perm[0]], half[perm[1]], half[perm[2]]),
                exponents: [e, e],
                position: *center,
                rotation: UnitQuaternion::from_rotation_matrix(&rotation),
            }
        })
        .collect();
    (states, size)
}

/// Center, axes (longest first) and half-extents of the box around the
/// points with the given orientation.
fn frame_box(
    points: &[Point3<f64>],
    mean: &Vector3<f64>,
    frame: &Rotation3<f64>,
) -> (Vector3<f64>, [Vector3<f64>; 3], [f64; 3]) {
    let mut spans: Vec<(Vector3<f64>, f64, f64)> = (0..3)
        .map(|k| {
            let axis: Vector3<f64> = frame.matrix().column(k).into();
            let (min, max) = project(points, mean, &axis);
            (axis, min, max)
        })
        .collect();
    spans.sort_by(|a, b| (b.2 - b.1).total_cmp(&(a.2 - a.1)));

    let mut center = *mean;
    let mut axes = [Vector3::zeros(); 3];
    let mut half = [0.0; 3];
    for (k, (axis, min, max)) in spans.into_iter().enumerate() {
        center += axis * ((min + max) / 2.0);
        axes[k] = axis;
        half[k] = ((max - min) / 2.0).clamp(SCALE_MIN, SCALE_MAX);
    }
    (center, axes, half)
}

fn project(points: &[Point3<f64>], origin: &Vector3<f64>, axis: &Vector3<f64>) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let s = (p.coords - origin).dot(axis);
            (lo.min(s), hi.max(s))
        })
}

/// Pattern search over body-frame rotations for the smallest box volume.
/// Principal axes are arbitrary when the covariance is (nearly) isotropic,
/// as for a cube, and a box at 45° to the faces starts the solver in the
/// wrong basin.
fn tighten_frame(
    points: &[Point3<f64>],
    origin: &Vector3<f64>,
    frame: Rotation3<f64>,
) -> Rotation3<f64> {
    let volume = |r: &Rotation3<f64>| -> f64 {
        (0..3)
            .map(|k| {
                let (min, max) = project(points, origin, &r.matrix().column(k).into());
                max - min
            })
            .product()
    };
    let mut best = frame;
    let mut best_volume = volume(&best);
    let mut step = 20f64.to_radians();
    while step > 0.05f64.to_radians() {
        let mut improved = false;
        for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
            for sign in [1.0, -1.0] {
                let candidate = best * Rotation3::from_scaled_axis(axis * (sign * step));
                let v = volume(&candidate);
                if v < best_volume * (1.0 - 1e-12) {
                    best = candidate;
                    best_volume = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::unit_cube;
    use nalgebra::Isometry3;

    fn target() -> Superquadric {
        Superquadric::new(
            Vector3::new(0.05, 0.03, 0.08),
            [1.0, 1.0],
            Point3::new(0.02, -0.01, 0.03),
            UnitQuaternion::from_euler_angles(0.4, -0.3, 1.1),
        )
        .unwrap()
    }

    fn data_only() -> FitConfig {
        FitConfig {
            lambda: 0.0,
            ..FitConfig::default()
        }
    }

    #[test]
    fn pseudo_huber_squares_to_twice_huber() {
        let delta = 0.1;
        for r in [-1.0, -0.1, -0.05, 0.0, 0.03, 0.1, 0.7] {
            let huber = if f64::abs(r) <= delta {
                r * r / 2.0
            } else {
                delta * (f64::abs(r) - delta / 2.0)
            };
            assert!((pseudo_huber(r, delta).powi(2) - 2.0 * huber).abs() < 1e-15);
        }
    }

    #[test]
    fn input_validation() {
        let few = vec![Point3::origin(); 10];
        assert!(matches!(
            fit_superquadric(&few, None, &data_only()),
            Err(SqError::TooFewPoints { got: 10, .. })
        ));
        let points = target().sample_surface(100, 0);
        assert!(matches!(
            fit_superquadric(&points, None, &FitConfig::default()),
            Err(SqError::MissingGrid(_))
        ));
        let mut bad = points.clone();
        bad[7].x = f64::NAN;
        assert!(matches!(
            fit_superquadric(&bad, None, &data_only()),
            Err(SqError::NonFinitePoint(7))
        ));
        let zero_starts = FitConfig {
            n_starts: 0,
            ..data_only()
        };
        assert!(matches!(
            fit_superquadric(&points, None, &zero_starts),
            Err(SqError::InvalidConfig(_))
        ));
    }

    #[test]
    fn recovers_noiseless_ellipsoid() {
        let truth = target();
        let points = truth.sample_surface(2000, 1);
        let fit = fit_superquadric(&points, None, &data_only()).unwrap();
        // An ellipsoid with distinct scales is determined up to axis signs.
        let mut scale: Vec<f64> = fit.superquadric.scale().iter().copied().collect();
        scale.sort_by(f64::total_cmp);
        for (got, want) in scale.iter().zip([0.03, 0.05, 0.08]) {
            assert!((got - want).abs() / want < 0.05, "scale {got} vs {want}");
        }
        for e in fit.superquadric.exponents() {
            assert!((e - 1.0).abs() < 0.1);
        }
        assert!((fit.superquadric.position() - truth.position()).norm() < 1e-3);
        assert!(fit.data_loss <= 1e-6, "data loss {}", fit.data_loss);
        assert!(fit.reg_loss.is_none());
    }

    #[test]
    fn recovers_diamond_cross_section() {
        // The tightest box sits at 45° to the axes of this shape.
        let truth = Superquadric::new(
            Vector3::new(0.0745, 0.0834, 0.1022),
            [1.21, 1.45],
            Point3::new(-0.01, 0.02, 0.0),
            UnitQuaternion::from_euler_angles(-0.7, 0.2, 2.0),
        )
        .unwrap();
        let points = truth.sample_surface(2000, 118);
        let fit = fit_superquadric(&points, None, &data_only()).unwrap();
        assert!(fit.data_loss <= 1e-6, "data loss {}", fit.data_loss);
        let [e1, e2] = fit.superquadric.exponents();
        assert!(
            (e1 - 1.21).abs() < 0.01 && (e2 - 1.45).abs() < 0.01,
            "exponents {e1} {e2}"
        );
    }

    #[test]
    fn cube_recovers_box_shape() {
        let points = unit_cube().sample_surface(2000, 4).points;
        let fit = fit_superquadric(&points, None, &data_only()).unwrap();
        let [e1, e2] = fit.superquadric.exponents();
        assert!(e1 <= 0.35 && e2 <= 0.35, "exponents {e1} {e2}");
        for a in fit.superquadric.scale().iter() {
            assert!((a - 0.5).abs() / 0.5 < 0.1, "scale {a}");
        }
    }

    #[test]
    fn best_start_is_no_worse_than_any_start() {
        let points = target().sample_surface(500, 2);
        let config = FitConfig {
            max_iters: 30,
            ..data_only()
        };
        let starts = fit_superquadric_starts(&points, None, &config).unwrap();
        let best = fit_superquadric(&points, None, &config).unwrap();
        assert_eq!(starts.len(), config.n_starts);
        assert!(starts.iter().all(|s| best.loss <= s.loss));
        assert_eq!(best, starts[best.start_index]);
    }

    #[test]
    fn fitting_is_deterministic() {
        let points = target().sample_surface(500, 3);
        let config = FitConfig {
            max_iters: 40,
            ..data_only()
        };
        assert_eq!(
            fit_superquadric(&points, None, &config).unwrap(),
            fit_superquadric(&points, None, &config).unwrap()
        );
    }

    #[test]
    fn rigid_motion_of_points_moves_the_fit() {
        let points = target().sample_surface(1000, 5);
        let t = Isometry3::new(Vector3::new(0.1, -0.05, 0.2), Vector3::new(0.3, 1.2, -0.4));
        let moved: Vec<Point3<f64>> = points.iter().map(|p| t * p).collect();
        let a = fit_superquadric(&points, None, &data_only()).unwrap();
        let b = fit_superquadric(&moved, None, &data_only()).unwrap();
        assert!((a.data_loss - b.data_loss).abs() < 1e-6);
        assert!((t * a.superquadric.position() - b.superquadric.position()).norm() < 1e-6);
        // Both fits describe the same solid.
        let expected = a.superquadric.transformed(&t);
        for p in moved.iter().step_by(10) {
            let probe = b.superquadric.position() + (p - b.superquadric.position()) * 0.9;
            assert!(
                (expected.implicit_value(&probe) - b.superquadric.implicit_value(&probe)).abs()
                    < 1e-4
            );
        }
    }

    #[test]
    fn record_round_trip() {
        let points = target().sample_surface(300, 6);
        let fit = fit_superquadric(
            &points,
            None,
            &FitConfig {
                max_iters: 10,
                ..data_only()
            },
        )
        .unwrap();
        let text = serde_json::to_string(&fit.record()).unwrap();
        for field in [
            "scale",
            "exponents",
            "position",
            "quaternion_wxyz",
            "data_loss",
            "reg_loss",
            "converged",
            "start_index",
        ] {
            assert!(text.contains(field), "{field}");
        }
        let back: FitRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(
            back.superquadric().unwrap().to_vector(),
            fit.superquadric.to_vector()
        );
    }
}
