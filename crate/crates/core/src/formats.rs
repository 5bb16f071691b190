//! Text formats: vision logs, camera lists and radio commands.
//!
//! A vision log is either a JSON array of records or one record per line:
//!
//! ```json
//! {"t": 0.016, "camera_id": 0,
//!  "balls": [{"x": 10.0, "y": -4.0}],
//!  "robots_blue": [{"id": 3, "x": 500.0, "y": 0.0, "theta": 1.57}],
//!  "robots_yellow": []}
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::radio::{ControlPacket, RadioError, RobotCommand, SLOTS};
use crate::tracker::{CameraModel, Detection, DetectionFrame, ObjectKind, Team};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid hex byte `{0}`")]
    Hex(String),
    #[error("slot {0} is out of range (0..{SLOTS})")]
    Slot(usize),
    #[error("slot {0} is given twice")]
    DuplicateSlot(usize),
    #[error(transparent)]
    Radio(#[from] RadioError),
}

fn json_error(e: serde_json::Error, first_line: usize) -> FormatError {
    FormatError::Json {
        line: first_line + e.line().saturating_sub(1),
        source: e,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRecord {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub id: u8,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionRecord {
    pub t: f64,
    #[serde(default)]
    pub camera_id: u32,
    #[serde(default)]
    pub balls: Vec<BallRecord>,
    #[serde(default)]
    pub robots_blue: Vec<RobotRecord>,
    #[serde(default)]
    pub robots_yellow: Vec<RobotRecord>,
}

impl VisionRecord {
    pub fn to_frame(&self) -> DetectionFrame {
        let cam = self.camera_id;
        let robots = |team: Team, list: &[RobotRecord]| {
            list.iter()
                .map(|r| Detection {
                    camera_id: cam,
                    kind: ObjectKind::Robot {
                        team,
                        number: r.id,
                    },
                    position: Vec2::new(r.x, r.y),
                    orientation: r.theta,
                })
                .collect::<Vec<_>>()
        };
        let mut detections: Vec<Detection> = self
            .balls
            .iter()
            .map(|b| Detection {
                camera_id: cam,
                kind: ObjectKind::Ball,
                position: Vec2::new(b.x, b.y),
                orientation: None,
            })
            .collect();
        detections.extend(robots(Team::Blue, &self.robots_blue));
        detections.extend(robots(Team::Yellow, &self.robots_yellow));
        DetectionFrame {
            t: self.t,
            camera_id: cam,
            detections,
        }
    }
}

impl From<&DetectionFrame> for VisionRecord {
    fn from(f: &DetectionFrame) -> Self {
        let mut rec = VisionRecord {
            t: f.t,
            camera_id: f.camera_id,
            balls: Vec::new(),
            robots_blue: Vec::new(),
            robots_yellow: Vec::new(),
        };
        for d in &f.detections {
            let (x, y) = (d.position.x, d.position.y);
            match d.kind {
                ObjectKind::Ball => rec.balls.push(BallRecord { x, y }),
                ObjectKind::Robot { team, number } => {
                    let r = RobotRecord {
                        id: number,
                        x,
                        y,
                        theta: d.orientation,
                    };
                    match team {
                        Team::Blue => rec.robots_blue.push(r),
                        Team::Yellow => rec.robots_yellow.push(r),
                    }
                }
            }
        }
        rec
    }
}

/// Parses a JSON array of records or JSON lines; blank lines are skipped.
pub fn parse_vision_log(text: &str) -> Result<Vec<DetectionFrame>, FormatError> {
    if text.trim_start().starts_with('[') {
        let recs: Vec<VisionRecord> =
            serde_json::from_str(text).map_err(|e| json_error(e, 1))?;
        return Ok(recs.iter().map(VisionRecord::to_frame).collect());
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<VisionRecord>(l)
                .map(|r| r.to_frame())
                .map_err(|e| json_error(e, i + 1))
        })
        .collect()
}

/// One JSON line per frame.
pub fn write_vision_log(frames: &[DetectionFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        // Plain data: serialization cannot fail.
        out.push_str(&serde_json::to_string(&VisionRecord::from(f)).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Splits frames into ticks of equal timestamp, preserving order.
pub fn group_ticks(frames: Vec<DetectionFrame>) -> Vec<Vec<DetectionFrame>> {
    let mut ticks: Vec<Vec<DetectionFrame>> = Vec::new();
    for f in frames {
        match ticks.last_mut() {
            Some(tick) if tick[0].t == f.t => tick.push(f),
            _ => ticks.push(vec![f]),
        }
    }
    ticks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub id: u32,
    /// `[x, y]`, mm.
    pub center: [f64; 2],
    /// mm
    pub coverage_radius: f64,
}

impl From<CameraRecord> for CameraModel {
    fn from(c: CameraRecord) -> Self {
        CameraModel::new(c.id, Vec2::new(c.center[0], c.center[1]), c.coverage_radius)
    }
}

/// JSON array of `{"id", "center": [x, y], "coverage_radius"}`.
pub fn parse_cameras(text: &str) -> Result<Vec<CameraModel>, FormatError> {
    let recs: Vec<CameraRecord> = serde_json::from_str(text).map_err(|e| json_error(e, 1))?;
    Ok(recs.into_iter().map(CameraModel::from).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotCommand {
    pub slot: usize,
    #[serde(flatten)]
    pub command: RobotCommand,
}

/// JSON form of a control packet.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadioRecord {
    #[serde(default)]
    pub packet_type: u8,
    #[serde(default)]
    pub group: u8,
    #[serde(default)]
    pub robots: Vec<SlotCommand>,
}

impl RadioRecord {
    pub fn to_packet(&self) -> Result<ControlPacket, FormatError> {
        let mut slots = [None; SLOTS];
        for sc in &self.robots {
            let cell = slots.get_mut(sc.slot).ok_or(FormatError::Slot(sc.slot))?;
            if cell.is_some() {
                return Err(FormatError::DuplicateSlot(sc.slot));
            }
            *cell = Some(sc.command);
        }
        Ok(ControlPacket {
            packet_type: self.packet_type,
            group: self.group,
            slots,
        })
    }
}

impl From<&ControlPacket> for RadioRecord {
    fn from(p: &ControlPacket) -> Self {
        Self {
            packet_type: p.packet_type,
            group: p.group,
            robots: p
                .slots
                .iter()
                .enumerate()
                .filter_map(|(slot, c)| c.map(|command| SlotCommand { slot, command }))
                .collect(),
        }
    }
}

/// Lowercase, space-separated bytes: `01 00 ff`.
pub fn to_hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Accepts bytes separated by whitespace or run together.
pub fn parse_hex(text: &str) -> Result<Vec<u8>, FormatError> {
    let digits: String = text.split_whitespace().collect();
    if !digits.len().is_multiple_of(2) {
        return Err(FormatError::Hex(digits[digits.len() - 1..].to_string()));
    }
    (0..digits.len())
        .step_by(2)
        .map(|i| {
            let pair = &digits[i..i + 2];
            u8::from_str_radix(pair, 16).map_err(|_| FormatError::Hex(pair.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{decode, encode};

    const LOG: &str = r#"
{"t": 0.0, "camera_id": 1, "balls": [{"x": 10.0, "y": -4.0}], "robots_blue": [{"id": 3, "x": 500.0, "y": 0.0, "theta": 1.5}]}

{"t": 0.0, "camera_id": 2, "robots_yellow": [{"id": 0, "x": -1.0, "y": 2.0}]}
{"t": 0.02, "camera_id": 1}
"#;

    #[test]
    fn vision_log_lines() {
        let frames = parse_vision_log(LOG).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0].detections.len(), 2);
        assert_eq!(frames[0].detections[0].kind, ObjectKind::Ball);
        assert_eq!(
            frames[0].detections[1].kind,
            ObjectKind::Robot {
                team: Team::Blue,
                number: 3
            }
        );
        assert_eq!(frames[1].detections[0].orientation, None);
        assert!(frames[2].detections.is_empty());

        let ticks = group_ticks(frames.clone());
        assert_eq!(ticks.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 1]);

        let again = parse_vision_log(&write_vision_log(&frames)).unwrap();
        assert_eq!(again, frames);
    }

    #[test]
    fn vision_log_array_and_errors() {
        let frames = parse_vision_log(r#"[{"t": 1.0, "balls": [{"x": 0, "y": 0}]}]"#).unwrap();
        assert_eq!(frames[0].camera_id, 0);
        match parse_vision_log("{\"t\": 0.0}\n{\"t\": oops}") {
            Err(FormatError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cameras() {
        let cams = parse_cameras(
            r#"[{"id": 0, "center": [-3000, 0], "coverage_radius": 4000},
                {"id": 1, "center": [3000, 0], "coverage_radius": 4000}]"#,
        )
        .unwrap();
        assert_eq!(cams.len(), 2);
        assert_eq!(cams[1].center, Vec2::new(3000.0, 0.0));
        assert_eq!(cams[1].observations, 0);
        let err = parse_cameras(r#"[{"id": 0, "center": [0, 0], "radius": 1}]"#).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
    }

    #[test]
    fn radio_json_to_hex() {
        let rec: RadioRecord = serde_json::from_str(r#"{"robots": [{"slot": 0}]}"#).unwrap();
        let bytes = encode(&rec.to_packet().unwrap()).unwrap();
        assert_eq!(to_hex(&bytes), "01 00 00 00 00 00 00");

        let rec: RadioRecord = serde_json::from_str(
            r#"{"group": 2, "robots": [{"slot": 3, "vx": -100, "w": 5, "kick_mode": "chip", "kick_power": 9}]}"#,
        )
        .unwrap();
        let p = rec.to_packet().unwrap();
        let back = decode(&parse_hex(&to_hex(&encode(&p).unwrap())).unwrap()).unwrap();
        assert_eq!(RadioRecord::from(&back), rec);
    }

    #[test]
    fn radio_json_errors() {
        let rec: RadioRecord = serde_json::from_str(r#"{"robots": [{"slot": 4}]}"#).unwrap();
        assert!(matches!(rec.to_packet(), Err(FormatError::Slot(4))));
        let rec: RadioRecord =
            serde_json::from_str(r#"{"robots": [{"slot": 1}, {"slot": 1}]}"#).unwrap();
        assert!(matches!(rec.to_packet(), Err(FormatError::DuplicateSlot(1))));
    }

    #[test]
    fn hex_parsing() {
        assert_eq!(parse_hex("01 0a\nFF").unwrap(), vec![1, 10, 255]);
        assert_eq!(parse_hex("010aff").unwrap(), vec![1, 10, 255]);
        assert!(parse_hex("1").is_err());
        assert!(parse_hex("zz").is_err());
        assert_eq!(parse_hex("").unwrap(), Vec::<u8>::new());
    }
}
