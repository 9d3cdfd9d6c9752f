//! Wire format: one JSON object per WebSocket text frame.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use reflex_core::kinematics::Pose;
use reflex_core::sdf_grid::shapes::{Primitive, ShapeSpec};

/// Position plus roll-pitch-yaw, world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseMsg {
    pub pos: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl PoseMsg {
    pub fn to_pose(&self) -> Pose {
        Pose::from_xyz_rpy(Vector3::from(self.pos), Vector3::from(self.rpy))
    }

    fn is_finite(&self) -> bool {
        self.pos.iter().chain(&self.rpy).all(|v| v.is_finite())
    }
}

impl From<&Pose> for PoseMsg {
    fn from(p: &Pose) -> Self {
        Self {
            pos: p.translation.into(),
            rpy: p.rpy().into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    SetObstaclePose { id: String, pose: PoseMsg },
    SetTarget { pose: PoseMsg },
    Pause,
    Resume,
    Reset,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SchemaError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown obstacle `{0}`")]
    UnknownObstacle(String),
    #[error("obstacle `{0}` is a recorded stream and cannot be posed")]
    NotPosable(String),
    #[error("pose has non-finite components")]
    NonFinite,
    #[error("mailbox full, message dropped")]
    MailboxFull,
}

/// Parse and check a client frame against the obstacles the session knows.
pub fn parse_client_message(text: &str, posable: &[String], recorded: &[String]) -> Result<ClientMessage, SchemaError> {
    let msg: ClientMessage = serde_json::from_str(text).map_err(|e| SchemaError::Malformed(e.to_string()))?;
    match &msg {
        ClientMessage::SetObstaclePose { id, pose } => {
            if recorded.contains(id) {
                return Err(SchemaError::NotPosable(id.clone()));
            }
            if !posable.contains(id) {
                return Err(SchemaError::UnknownObstacle(id.clone()));
            }
            if !pose.is_finite() {
                return Err(SchemaError::NonFinite);
            }
        }
        ClientMessage::SetTarget { pose } if !pose.is_finite() => return Err(SchemaError::NonFinite),
        _ => {}
    }
    Ok(msg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Converged,
    Stalled,
    Paused,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_us: f64,
    pub rms_us: f64,
    pub max_us: f64,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    #[serde(rename = "type")]
    pub kind: String,
    pub tick: u64,
    /// Scene time since the last reset, seconds.
    pub t: f64,
    pub q: Vec<f64>,
    pub ee: PoseMsg,
    pub links: Vec<PoseMsg>,
    pub clearance: Vec<f64>,
    pub err_pos: f64,
    pub err_rot: f64,
    pub iter_us: f64,
    pub status: Status,
    pub target: PoseMsg,
    pub obstacles: Vec<ObstacleState>,
    /// Client messages applied so far, all before this tick.
    pub inputs: u64,
    pub latency: LatencyStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleState {
    pub id: String,
    /// `None` for recorded streams.
    pub pose: Option<PoseMsg>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorFrame {
    #[serde(rename = "type")]
    pub kind: String,
    pub message: String,
}

impl ErrorFrame {
    pub fn new(e: &SchemaError) -> Self {
        Self {
            kind: "error".into(),
            message: e.to_string(),
        }
    }
}

/// Geometry for rendering: primitives when known, else a bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryMsg {
    Shape { shape: ShapeSpec },
    Bounds { min: [f64; 3], max: [f64; 3] },
}

impl GeometryMsg {
    pub fn primitives(ps: &[Primitive]) -> Self {
        GeometryMsg::Shape {
            shape: ShapeSpec::Compound(ps.to_vec()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub name: String,
    /// In the link frame.
    pub geometry: GeometryMsg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticGeometry {
    pub name: String,
    pub pose: PoseMsg,
    pub geometry: GeometryMsg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleGeometry {
    pub id: String,
    /// `None` for recorded point streams.
    pub geometry: Option<GeometryMsg>,
    pub posable: bool,
}

/// First frame on every connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    #[serde(rename = "type")]
    pub kind: String,
    pub scenario: String,
    pub robot: String,
    pub base: PoseMsg,
    pub links: Vec<LinkGeometry>,
    #[serde(rename = "static")]
    pub static_objects: Vec<StaticGeometry>,
    pub obstacles: Vec<ObstacleGeometry>,
    pub target: PoseMsg,
    pub rate_hz: f64,
}
