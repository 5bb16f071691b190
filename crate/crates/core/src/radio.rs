//! Compact radio command packet.
//!
//! One packet fits the 25-byte user payload of an nRF24L01+ frame and
//! carries commands for up to four robots:
//!
//! ```text
//! byte 0        : type[7:6] | group[5:4] | mask[3:0]
//! bytes 1..     : one 48-bit big-endian block per set mask bit, lowest slot first
//!                 vx:13 | vy:13 | w:12 | dribble:2 | kick_mode:1 | kick_power:7
//! ```
//!
//! `vx`, `vy` (mm/s) and `w` (centirad/s) are two's complement. Slot `i` of
//! group `g` addresses robot `4g + i`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_PAYLOAD: usize = 25;
pub const COMMAND_BYTES: usize = 6;
pub const SLOTS: usize = 4;
/// 5-byte address + 2-byte CRC + 25-byte payload.
pub const AIRFRAME_BYTES: usize = 32;

pub const MOTION_CONTROL: u8 = 0;

const VEL_BITS: u32 = 13;
const W_BITS: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RadioError {
    #[error("{field} = {value} out of range [{min}, {max}]")]
    Range {
        field: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("framing error: expected {expected} bytes, got {got}")]
    Framing { expected: usize, got: usize },
    #[error("robot id {0} does not fit any packet group")]
    RobotId(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KickMode {
    #[default]
    Flat,
    Chip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotCommand {
    /// mm/s, robot frame.
    pub vx: i16,
    /// mm/s, robot frame.
    pub vy: i16,
    /// centirad/s.
    pub w: i16,
    pub dribble: u8,
    pub kick_mode: KickMode,
    pub kick_power: u8,
}

fn check(field: &'static str, value: i64, min: i64, max: i64) -> Result<(), RadioError> {
    if value < min || value > max {
        return Err(RadioError::Range {
            field,
            value,
            min,
            max,
        });
    }
    Ok(())
}

fn sign_extend(raw: u64, bits: u32) -> i16 {
    let shift = 64 - bits;
    ((raw << shift) as i64 >> shift) as i16
}

impl RobotCommand {
    pub const VEL_LIMIT: i16 = 4095;
    pub const W_LIMIT: i16 = 2047;
    pub const DRIBBLE_MAX: u8 = 3;
    pub const KICK_MAX: u8 = 127;

    pub fn validate(&self) -> Result<(), RadioError> {
        let v = Self::VEL_LIMIT as i64;
        check("vx", self.vx as i64, -v, v)?;
        check("vy", self.vy as i64, -v, v)?;
        let w = Self::W_LIMIT as i64;
        check("w", self.w as i64, -w, w)?;
        check("dribble", self.dribble as i64, 0, Self::DRIBBLE_MAX as i64)?;
        check("kick_power", self.kick_power as i64, 0, Self::KICK_MAX as i64)
    }

    /// Builds a command from physical quantities, saturating to the wire ranges.
    pub fn saturating(vx: f64, vy: f64, w_rad: f64) -> Self {
        let v = Self::VEL_LIMIT as f64;
        let w = Self::W_LIMIT as f64;
        Self {
            vx: vx.round().clamp(-v, v) as i16,
            vy: vy.round().clamp(-v, v) as i16,
            w: (w_rad * 100.0).round().clamp(-w, w) as i16,
            ..Self::default()
        }
    }

    fn pack(&self) -> [u8; COMMAND_BYTES] {
        let mask = |bits: u32| (1u64 << bits) - 1;
        let word = ((self.vx as u64 & mask(VEL_BITS)) << 35)
            | ((self.vy as u64 & mask(VEL_BITS)) << 22)
            | ((self.w as u64 & mask(W_BITS)) << 10)
            | ((self.dribble as u64 & 0x3) << 8)
            | ((self.kick_mode as u64) << 7)
            | (self.kick_power as u64 & 0x7f);
        let bytes = word.to_be_bytes();
        let mut out = [0u8; COMMAND_BYTES];
        out.copy_from_slice(&bytes[2..]);
        out
    }

    fn unpack(block: &[u8]) -> Self {
        let mut bytes = [0u8; 8];
        bytes[2..].copy_from_slice(block);
        let word = u64::from_be_bytes(bytes);
        Self {
            vx: sign_extend(word >> 35, VEL_BITS),
            vy: sign_extend(word >> 22, VEL_BITS),
            w: sign_extend(word >> 10, W_BITS),
            dribble: ((word >> 8) & 0x3) as u8,
            kick_mode: if (word >> 7) & 1 == 1 {
                KickMode::Chip
            } else {
                KickMode::Flat
            },
            kick_power: (word & 0x7f) as u8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ControlPacket {
    pub packet_type: u8,
    pub group: u8,
    pub slots: [Option<RobotCommand>; SLOTS],
}

impl ControlPacket {
    pub fn mask(&self) -> u8 {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    pub fn encoded_len(&self) -> usize {
        1 + COMMAND_BYTES * self.mask().count_ones() as usize
    }

    /// Groups per-robot commands into the fewest packets, one per group of four ids.
    pub fn for_robots(commands: &[(u8, RobotCommand)]) -> Result<Vec<ControlPacket>, RadioError> {
        let mut packets: Vec<ControlPacket> = Vec::new();
        for &(id, cmd) in commands {
            if id >= 16 {
                return Err(RadioError::RobotId(id));
            }
            let group = id / 4;
            let idx = match packets.iter().position(|p| p.group == group) {
                Some(i) => i,
                None => {
                    packets.push(ControlPacket {
                        group,
                        ..ControlPacket::default()
                    });
                    packets.len() - 1
                }
            };
            packets[idx].slots[(id % 4) as usize] = Some(cmd);
        }
        packets.sort_by_key(|p| p.group);
        Ok(packets)
    }
}

pub fn encode(packet: &ControlPacket) -> Result<Vec<u8>, RadioError> {
    check("packet_type", packet.packet_type as i64, 0, 3)?;
    check("group", packet.group as i64, 0, 3)?;
    let mut out = Vec::with_capacity(packet.encoded_len());
    out.push((packet.packet_type << 6) | (packet.group << 4) | packet.mask());
    for cmd in packet.slots.iter().flatten() {
        cmd.validate()?;
        out.extend_from_slice(&cmd.pack());
    }
    debug_assert!(out.len() <= MAX_PAYLOAD);
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<ControlPacket, RadioError> {
    let Some(&header) = bytes.first() else {
        return Err(RadioError::Framing {
            expected: 1,
            got: 0,
        });
    };
    let mask = header & 0x0f;
    let expected = 1 + COMMAND_BYTES * mask.count_ones() as usize;
    if bytes.len() != expected {
        return Err(RadioError::Framing {
            expected,
            got: bytes.len(),
        });
    }
    let mut packet = ControlPacket {
        packet_type: header >> 6,
        group: (header >> 4) & 0x3,
        slots: [None; SLOTS],
    };
    let mut blocks = bytes[1..].chunks_exact(COMMAND_BYTES);
    for (i, slot) in packet.slots.iter_mut().enumerate() {
        if mask & (1 << i) != 0 {
            *slot = blocks.next().map(RobotCommand::unpack);
        }
    }
    Ok(packet)
}

/// Minimum air data rate in bits/s for commanding `n_robots` at `control_hz`.
pub fn bandwidth_estimate(n_robots: usize, control_hz: f64) -> f64 {
    let packets = n_robots.div_ceil(SLOTS);
    (packets * AIRFRAME_BYTES * 8) as f64 * control_hz
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_packet() {
        let p = ControlPacket::default();
        assert_eq!(encode(&p).unwrap(), vec![0x00]);
        assert_eq!(decode(&[0x00]).unwrap(), p);
    }

    #[test]
    fn single_zero_command() {
        let mut p = ControlPacket::default();
        p.slots[0] = Some(RobotCommand::default());
        assert_eq!(encode(&p).unwrap(), vec![0x01, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn full_packet_fills_payload() {
        let p = ControlPacket {
            packet_type: 0,
            group: 2,
            slots: [Some(RobotCommand {
                vx: -1,
                ..Default::default()
            }); 4],
        };
        let bytes = encode(&p).unwrap();
        assert_eq!(bytes.len(), 25);
        assert_eq!(bytes[0], 0b0010_1111);
        assert_eq!(decode(&bytes).unwrap(), p);
    }

    #[test]
    fn known_bit_layout() {
        let mut p = ControlPacket {
            packet_type: 1,
            group: 0,
            ..Default::default()
        };
        p.slots[2] = Some(RobotCommand {
            vx: 1,
            vy: -1,
            w: 3,
            dribble: 2,
            kick_mode: KickMode::Chip,
            kick_power: 5,
        });
        // vx=0000000000001 vy=1111111111111 w=000000000011 d=10 m=1 p=0000101
        let word: u64 = (1 << 35) | (0x1fff << 22) | (3 << 10) | (2 << 8) | (1 << 7) | 5;
        let expected: Vec<u8> = std::iter::once(0b0100_0100)
            .chain(word.to_be_bytes()[2..].iter().copied())
            .collect();
        assert_eq!(encode(&p).unwrap(), expected);
    }

    #[test]
    fn range_errors_name_the_field() {
        let mut p = ControlPacket::default();
        p.slots[1] = Some(RobotCommand {
            w: 2048,
            ..Default::default()
        });
        assert_eq!(
            encode(&p),
            Err(RadioError::Range {
                field: "w",
                value: 2048,
                min: -2047,
                max: 2047
            })
        );
        p.slots[1] = Some(RobotCommand {
            vy: -4096,
            ..Default::default()
        });
        assert!(matches!(encode(&p), Err(RadioError::Range { field: "vy", .. })));
        p.slots[1] = Some(RobotCommand {
            kick_power: 128,
            ..Default::default()
        });
        assert!(matches!(encode(&p), Err(RadioError::Range { field: "kick_power", .. })));
        let bad = ControlPacket {
            group: 4,
            ..Default::default()
        };
        assert!(matches!(encode(&bad), Err(RadioError::Range { field: "group", .. })));
    }

    #[test]
    fn framing_error() {
        assert_eq!(
            decode(&[0x03, 0, 0, 0, 0, 0, 0]),
            Err(RadioError::Framing {
                expected: 13,
                got: 7
            })
        );
        assert!(decode(&[]).is_err());
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth_estimate(8, 60.0), 30_720.0);
        assert_eq!(bandwidth_estimate(0, 60.0), 0.0);
        assert_eq!(bandwidth_estimate(16, 60.0), 61_440.0);
        assert_eq!(bandwidth_estimate(5, 60.0), 30_720.0);
    }

    #[test]
    fn groups_robots() {
        let cmds = [(5, RobotCommand::default()), (0, RobotCommand::default()), (7, RobotCommand::default())];
        let packets = ControlPacket::for_robots(&cmds).unwrap();
        assert_eq!(packets.len(), 2);
        assert_eq!(packets[0].mask(), 0b0001);
        assert_eq!(packets[1].group, 1);
        assert_eq!(packets[1].mask(), 0b1010);
        assert!(ControlPacket::for_robots(&[(16, RobotCommand::default())]).is_err());
    }

    fn command() -> impl Strategy<Value = RobotCommand> {
        (
            -4095i16..=4095,
            -4095i16..=4095,
            -2047i16..=2047,
            0u8..=3,
            any::<bool>(),
            0u8..=127,
        )
            .prop_map(|(vx, vy, w, dribble, chip, kick_power)| RobotCommand {
                vx,
                vy,
                w,
                dribble,
                kick_mode: if chip { KickMode::Chip } else { KickMode::Flat },
                kick_power,
            })
    }

    fn packet() -> impl Strategy<Value = ControlPacket> {
        (0u8..4, 0u8..4, proptest::array::uniform4(proptest::option::of(command())))
            .prop_map(|(packet_type, group, slots)| ControlPacket {
                packet_type,
                group,
                slots,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(5_000))]

        #[test]
        fn round_trip_and_length(p in packet()) {
            let bytes = encode(&p).unwrap();
            prop_assert_eq!(bytes.len(), 1 + 6 * p.mask().count_ones() as usize);
            prop_assert!(bytes.len() <= MAX_PAYLOAD);
            prop_assert_eq!(decode(&bytes).unwrap(), p);
        }

        #[test]
        fn field_isolation(
            mut p in packet(),
            slot in 0usize..4,
            original in command(),
            replacement in command(),
        ) {
            p.slots[slot] = Some(original);
            let mut q = p;
            q.slots[slot] = Some(replacement);
            let a = encode(&p).unwrap();
            let b = encode(&q).unwrap();
            let block = (0..slot).filter(|i| p.slots[*i].is_some()).count();
            let range = 1 + 6 * block..1 + 6 * (block + 1);
            for i in 0..a.len() {
                if !range.contains(&i) {
                    prop_assert_eq!(a[i], b[i]);
                }
            }
        }

        #[test]
        fn bandwidth_monotone_and_linear(n in 0usize..64, hz in 1.0..500.0f64) {
            prop_assert!(bandwidth_estimate(n, hz) <= bandwidth_estimate(n + 1, hz));
            prop_assert!((bandwidth_estimate(n, 2.0 * hz) - 2.0 * bandwidth_estimate(n, hz)).abs() < 1e-6);
        }
    }
}
