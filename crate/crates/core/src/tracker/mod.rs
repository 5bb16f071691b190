//! Vision filtering: turns noisy per-camera detections into a
//! confidence-gated world state.
//!
//! Each tracked object carries a constant-velocity Kalman filter, plus a
//! heading filter for robots. Confidence rises while an object is seen and
//! decays while it is missing; in the meantime the filter keeps predicting,
//! so briefly lost objects coast along their last estimated velocity.

mod confidence;
mod fusion;
mod kalman;

pub use confidence::{confidence_step, is_valid, ConfidenceParams};
pub use fusion::{fuse_detections, CameraModel, FusionError, FusionWeighting};
pub use kalman::{
    kalman_gain, kalman_predict, kalman_update, update_with_innovation, ConstantVelocity,
    FixedModel, HeadingModel, KalmanError, KalmanModel, KalmanState,
};

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix4, SMatrix, SVector, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{normalize_angle, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackerError {
    #[error("frame at t={t} from camera {camera_id} is older than the previous one at t={last}")]
    OutOfOrder { camera_id: u32, t: f64, last: f64 },
    #[error(transparent)]
    Kalman(#[from] KalmanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Blue,
    Yellow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum ObjectKind {
    Ball,
    Robot { team: Team, number: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub camera_id: u32,
    pub kind: ObjectKind,
    pub position: Vec2,
    /// Robots only, rad.
    pub orientation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    pub t: f64,
    pub camera_id: u32,
    pub detections: Vec<Detection>,
}

/// Filter noise settings for one object class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// White-acceleration spectral density, mm/s².
    pub sigma_a: f64,
    /// Position measurement noise, mm.
    pub sigma_z: f64,
    /// Velocity uncertainty of a freshly spawned track, mm/s.
    pub sigma_v0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub ball: NoiseParams,
    pub robot: NoiseParams,
    pub heading: HeadingParams,
    pub confidence: ConfidenceParams,
    /// Association gate, mm.
    pub gate_radius: f64,
    /// Cross-camera detections of one kind closer than this are one object, mm.
    pub fusion_radius: f64,
    /// Seconds a track may sit at zero confidence before it is dropped.
    pub expiry: f64,
    pub weighting: FusionWeighting,
    /// Learn camera footprints from the detections they report.
    pub refine_cameras: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadingParams {
    /// rad/√s
    pub sigma_w: f64,
    /// rad
    pub sigma_z: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            ball: NoiseParams {
                sigma_a: 1000.0,
                sigma_z: 10.0,
                sigma_v0: 3000.0,
            },
            robot: NoiseParams {
                sigma_a: 2000.0,
                sigma_z: 10.0,
                sigma_v0: 1000.0,
            },
            heading: HeadingParams {
                sigma_w: 2.0,
                sigma_z: 0.05,
            },
            confidence: ConfidenceParams::default(),
            gate_radius: 300.0,
            fusion_radius: 150.0,
            expiry: 0.5,
            weighting: FusionWeighting::Distance,
            refine_cameras: true,
        }
    }
}

impl TrackerConfig {
    fn noise(&self, kind: ObjectKind) -> &NoiseParams {
        match kind {
            ObjectKind::Ball => &self.ball,
            ObjectKind::Robot { .. } => &self.robot,
        }
    }

    fn motion_model(&self, kind: ObjectKind) -> ConstantVelocity {
        let n = self.noise(kind);
        ConstantVelocity {
            sigma_a: n.sigma_a,
            sigma_z: n.sigma_z,
        }
    }

    fn heading_model(&self) -> HeadingModel {
        HeadingModel {
            sigma_w: self.heading.sigma_w,
            sigma_z: self.heading.sigma_z,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedObject {
    pub track_id: u64,
    pub kind: ObjectKind,
    pub state: KalmanState<4>,
    pub heading: Option<KalmanState<1>>,
    pub confidence: f64,
    pub frames_since_seen: u32,
    zero_since: Option<f64>,
}

impl TrackedObject {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.state.x[0], self.state.x[1])
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.state.x[2], self.state.x[3])
    }

    pub fn theta(&self) -> Option<f64> {
        self.heading.map(|h| normalize_angle(h.x[0]))
    }
}

/// Immutable view of one track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSnapshot {
    pub track_id: u64,
    pub kind: ObjectKind,
    pub position: Vec2,
    pub velocity: Vec2,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub confidence: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub t: f64,
    pub objects: Vec<ObjectSnapshot>,
}

impl WorldSnapshot {
    /// Most confident valid ball.
    pub fn ball(&self) -> Option<&ObjectSnapshot> {
        self.best(|k| k == ObjectKind::Ball)
    }

    pub fn robot(&self, team: Team, number: u8) -> Option<&ObjectSnapshot> {
        self.best(|k| k == ObjectKind::Robot { team, number })
    }

    fn best(&self, pred: impl Fn(ObjectKind) -> bool) -> Option<&ObjectSnapshot> {
        self.objects
            .iter()
            .filter(|o| o.valid && pred(o.kind))
            .max_by(|a, b| a.confidence.total_cmp(&b.confidence))
    }
}

/// Detections of one object fused across the cameras of a tick.
#[derive(Debug, Clone)]
struct Cluster {
    kind: ObjectKind,
    position: Vec2,
    orientation: Option<f64>,
    members: Vec<(Vec2, u32, Option<f64>)>,
}

/// Single-writer world model fed by detection frames.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    config: TrackerConfig,
    cameras: BTreeMap<u32, CameraModel>,
    configured: BTreeSet<u32>,
    last_frame: BTreeMap<u32, f64>,
    tracks: Vec<TrackedObject>,
    next_id: u64,
    t: f64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    /// Registers a known camera footprint. Its center is trusted; only the
    /// coverage radius is refined.
    pub fn with_camera(mut self, camera: CameraModel) -> Self {
        self.configured.insert(camera.id);
        self.cameras.insert(camera.id, camera);
        self
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn cameras(&self) -> impl Iterator<Item = &CameraModel> {
        self.cameras.values()
    }

    pub fn tracks(&self) -> &[TrackedObject] {
        &self.tracks
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        let params = &self.config.confidence;
        WorldSnapshot {
            t: self.t,
            objects: self
                .tracks
                .iter()
                .map(|tr| ObjectSnapshot {
                    track_id: tr.track_id,
                    kind: tr.kind,
                    position: tr.position(),
                    velocity: tr.velocity(),
                    theta: tr.theta(),
                    confidence: tr.confidence,
                    valid: is_valid(tr.confidence, params),
                })
                .collect(),
        }
    }

    pub fn ingest_frame(&mut self, frame: &DetectionFrame) -> Result<(), TrackerError> {
        self.ingest_tick(std::slice::from_ref(frame))
    }

    /// Ingests the frames of all cameras captured in one vision tick. Objects
    /// seen by several of them are fused before the update.
    pub fn ingest_tick(&mut self, frames: &[DetectionFrame]) -> Result<(), TrackerError> {
        if frames.is_empty() {
            return Ok(());
        }
        for f in frames {
            if let Some(&last) = self.last_frame.get(&f.camera_id) {
                if f.t < last {
                    return Err(TrackerError::OutOfOrder {
                        camera_id: f.camera_id,
                        t: f.t,
                        last,
                    });
                }
            }
        }
        let now = frames.iter().map(|f| f.t).fold(f64::NEG_INFINITY, f64::max);
        for f in frames {
            self.last_frame.insert(f.camera_id, f.t);
        }

        self.learn_cameras(frames);

        for tr in &mut self.tracks {
            let dt = (now - tr.state.t).max(0.0);
            let model = self.config.motion_model(tr.kind);
            tr.state = kalman_predict::<_, 4, 2, 2>(&tr.state, &model, dt, None)?;
            if let Some(h) = &tr.heading {
                let hm = self.config.heading_model();
                tr.heading = Some(kalman_predict::<_, 1, 1, 1>(h, &hm, dt, None)?);
            }
        }

        let clusters = self.cluster(frames);
        let assignment = self.associate(&clusters);

        let params = self.config.confidence;
        let mut matched = vec![false; self.tracks.len()];
        for (ci, ti) in assignment.iter().enumerate() {
            let Some(ti) = *ti else { continue };
            matched[ti] = true;
            let cluster = &clusters[ci];
            let model = self.config.motion_model(cluster.kind);
            let hm = self.config.heading_model();
            let tr = &mut self.tracks[ti];
            let z = Vector2::new(cluster.position.x, cluster.position.y);
            tr.state = kalman_update::<_, 4, 2, 2>(&tr.state, &model, &z)?;
            if let (Some(h), Some(theta)) = (&tr.heading, cluster.orientation) {
                let innov = SVector::<f64, 1>::from_element(normalize_angle(theta - h.x[0]));
                let mut next = update_with_innovation::<_, 1, 1, 1>(h, &hm, &innov)?;
                next.x[0] = normalize_angle(next.x[0]);
                tr.heading = Some(next);
            }
            tr.confidence = confidence_step(tr.confidence, true, &params);
            tr.frames_since_seen = 0;
        }

        let observers: Vec<u32> = frames.iter().map(|f| f.camera_id).collect();
        for (ti, tr) in self.tracks.iter_mut().enumerate() {
            if matched[ti] {
                continue;
            }
            let pos = tr.position();
            let watched = observers.iter().any(|id| {
                match (self.cameras.get(id), self.configured.contains(id)) {
                    (Some(cam), true) => cam.covers(pos, 0.05),
                    _ => true,
                }
            });
            if watched {
                tr.confidence = confidence_step(tr.confidence, false, &params);
                tr.frames_since_seen += 1;
            }
        }

        for (ci, cluster) in clusters.iter().enumerate() {
            if assignment[ci].is_none() {
                self.spawn(cluster, now);
            }
        }

        let expiry = self.config.expiry;
        self.tracks.retain_mut(|tr| {
            if tr.confidence > 0.0 {
                tr.zero_since = None;
                return true;
            }
            let since = *tr.zero_since.get_or_insert(now);
            now - since <= expiry
        });

        self.t = self.t.max(now);
        Ok(())
    }

    fn learn_cameras(&mut self, frames: &[DetectionFrame]) {
        for f in frames {
            for d in &f.detections {
                let configured = self.configured.contains(&f.camera_id);
                let cam = self
                    .cameras
                    .entry(f.camera_id)
                    .or_insert_with(|| CameraModel::new(f.camera_id, d.position, 1.0));
                if !self.config.refine_cameras {
                    continue;
                }
                *cam = if configured {
                    cam.extend(d.position)
                } else {
                    cam.refine(d.position)
                };
            }
        }
    }

    fn cluster(&self, frames: &[DetectionFrame]) -> Vec<Cluster> {
        let mut order: Vec<&DetectionFrame> = frames.iter().collect();
        order.sort_by_key(|f| f.camera_id);
        let mut clusters: Vec<Cluster> = Vec::new();
        for f in order {
            for d in &f.detections {
                let home = clusters.iter_mut().find(|c| {
                    c.kind == d.kind
                        && c.members.iter().all(|m| m.1 != f.camera_id)
                        && c.members[0].0.distance(d.position) <= self.config.fusion_radius
                });
                match home {
                    Some(c) => c.members.push((d.position, f.camera_id, d.orientation)),
                    None => clusters.push(Cluster {
                        kind: d.kind,
                        position: d.position,
                        orientation: d.orientation,
                        members: vec![(d.position, f.camera_id, d.orientation)],
                    }),
                }
            }
        }
        for c in &mut clusters {
            if c.members.len() > 1 {
                let pairs: Vec<(Vec2, &CameraModel)> = c
                    .members
                    .iter()
                    .filter_map(|(p, cam, _)| self.cameras.get(cam).map(|m| (*p, m)))
                    .collect();
                if let Ok(p) = fuse_detections(&pairs, self.config.weighting) {
                    c.position = p;
                }
                c.orientation = circular_mean(c.members.iter().filter_map(|m| m.2));
            }
        }
        clusters
    }

    /// Greedy nearest-neighbor within the gate. Returns the track index for
    /// each cluster.
    fn associate(&self, clusters: &[Cluster]) -> Vec<Option<usize>> {
        let gate = self.config.gate_radius;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, c) in clusters.iter().enumerate() {
            for (ti, tr) in self.tracks.iter().enumerate() {
                if tr.kind != c.kind {
                    continue;
                }
                let d = tr.position().distance(c.position);
                if d <= gate {
                    pairs.push((d, ci, ti));
                }
            }
        }
        // Clusters are already in (camera id, detection index) order.
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut by_cluster = vec![None; clusters.len()];
        let mut used = vec![false; self.tracks.len()];
        for (_, ci, ti) in pairs {
            if by_cluster[ci].is_none() && !used[ti] {
                by_cluster[ci] = Some(ti);
                used[ti] = true;
            }
        }
        by_cluster
    }

    fn spawn(&mut self, cluster: &Cluster, now: f64) {
        let noise = *self.config.noise(cluster.kind);
        let pv = noise.sigma_z * noise.sigma_z;
        let vv = noise.sigma_v0 * noise.sigma_v0;
        let state = KalmanState::new(
            Vector4::new(cluster.position.x, cluster.position.y, 0.0, 0.0),
            Matrix4::from_diagonal(&Vector4::new(pv, pv, vv, vv)),
            now,
        );
        let heading = match cluster.kind {
            ObjectKind::Robot { .. } => {
                let theta = cluster.orientation.unwrap_or(0.0);
                let var = self.config.heading.sigma_z.powi(2);
                Some(KalmanState::new(
                    SVector::<f64, 1>::from_element(normalize_angle(theta)),
                    SMatrix::<f64, 1, 1>::from_element(var),
                    now,
                ))
            }
            ObjectKind::Ball => None,
        };
        self.tracks.push(TrackedObject {
            track_id: self.next_id,
            kind: cluster.kind,
            state,
            heading,
            confidence: confidence_step(0.0, true, &self.config.confidence),
            frames_since_seen: 0,
            zero_since: None,
        });
        self.next_id += 1;
    }
}

fn circular_mean(angles: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c, mut n) = (0.0, 0.0, 0);
    for a in angles {
        s += a.sin();
        c += a.cos();
        n += 1;
    }
    (n > 0).then(|| s.atan2(c))
}
