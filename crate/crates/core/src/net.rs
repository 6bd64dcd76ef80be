//! Range-limited, lossy single-hop message exchange between robots.
//!
//! Messages are delivered within the tick they are sent: the configured
//! propagation delay (sub-microsecond) is far below the duration of a tick.
//! Bandwidth is accounted, not contended. Every ordered sender/receiver pair
//! in range gets its own independent loss trial.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::maze::Cell;

/// Encoded size of a [`NetMessage`] in bytes.
pub const MESSAGE_LEN: usize = 52;
pub const MAGIC: [u8; 4] = *b"SWQM";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("expected {MESSAGE_LEN} bytes, got {0}")]
    BadLength(usize),
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("invalid network parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetConfig {
    /// Maximum centre-to-centre distance, in pixels, for delivery.
    pub range_px: f64,
    /// Independent per-receiver drop probability.
    pub loss_prob: f64,
    pub delay_us: f64,
    pub bandwidth_mbps: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            range_px: 1500.0,
            loss_prob: 0.0,
            delay_us: 0.2,
            bandwidth_mbps: 54.0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |name, reason: &str| {
            Err(NetError::InvalidParam {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.range_px > 0.0 && self.range_px.is_finite()) {
            return bad("range_px", "must be finite and > 0");
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return bad("loss_prob", "must lie in [0, 1]");
        }
        if !(self.delay_us >= 0.0 && self.delay_us.is_finite()) {
            return bad("delay_us", "must be finite and >= 0");
        }
        if !(self.bandwidth_mbps > 0.0 && self.bandwidth_mbps.is_finite()) {
            return bad("bandwidth_mbps", "must be finite and > 0");
        }
        Ok(())
    }

    /// Bytes the link could carry during a tick of `tick_seconds`.
    pub fn byte_budget(&self, tick_seconds: f64) -> f64 {
        self.bandwidth_mbps * 1e6 / 8.0 * tick_seconds
    }

    /// Ticks a message spends in flight for a given tick length. Zero for any
    /// tick longer than the propagation delay.
    pub fn delivery_lag_ticks(&self, tick_seconds: f64) -> u64 {
        (self.delay_us * 1e-6 / tick_seconds).floor() as u64
    }
}

/// The per-tick broadcast: sender position and its Q-values there. Receiving
/// it also marks `pos` as explored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetMessage {
    pub sender_id: u32,
    pub tick: u64,
    pub pos: Cell,
    pub qvals: [f64; 4],
}

impl NetMessage {
    pub const fn explored_mark(&self) -> bool {
        true
    }

    /// Little-endian layout: magic, u32 sender, u64 tick, u16 row, u16 col,
    /// four f64 values in N, E, S, W order.
    pub fn encode(&self) -> [u8; MESSAGE_LEN] {
        let mut out = [0u8; MESSAGE_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&self.sender_id.to_le_bytes());
        out[8..16].copy_from_slice(&self.tick.to_le_bytes());
        out[16..18].copy_from_slice(&(self.pos.row as u16).to_le_bytes());
        out[18..20].copy_from_slice(&(self.pos.col as u16).to_le_bytes());
        for (i, v) in self.qvals.iter().enumerate() {
            out[20 + 8 * i..28 + 8 * i].copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, NetError> {
        if bytes.len() != MESSAGE_LEN {
            return Err(NetError::BadLength(bytes.len()));
        }
        let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(NetError::BadMagic(magic));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let mut qvals = [0.0; 4];
        for (i, v) in qvals.iter_mut().enumerate() {
            let at = 20 + 8 * i;
            *v = f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        }
        Ok(Self {
            sender_id: u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")),
            tick: u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")),
            pos: Cell::new(u16_at(16) as usize, u16_at(18) as usize),
            qvals,
        })
    }
}

/// Transmission counters. `sent == delivered + dropped` and
/// `bytes_sent == sent * MESSAGE_LEN` always hold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub bytes_sent: u64,
}

impl LinkStats {
    fn record(&mut self, delivered: bool) {
        self.sent += 1;
        self.bytes_sent += MESSAGE_LEN as u64;
        if delivered {
            self.delivered += 1;
        } else {
            self.dropped += 1;
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.sent == self.delivered + self.dropped
            && self.bytes_sent == self.sent * MESSAGE_LEN as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Delivered,
    Dropped,
}

/// Global and per-link (sender, receiver) counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetStats {
    pub total: LinkStats,
    pub per_link: BTreeMap<(u32, u32), LinkStats>,
}

impl NetStats {
    pub fn is_consistent(&self) -> bool {
        let mut sum = LinkStats::default();
        for s in self.per_link.values() {
            if !s.is_consistent() {
                return false;
            }
            sum.sent += s.sent;
            sum.delivered += s.delivered;
            sum.dropped += s.dropped;
            sum.bytes_sent += s.bytes_sent;
        }
        self.total.is_consistent() && sum == self.total
    }
}

pub fn in_range(a: Cell, b: Cell, cfg: &NetConfig, pitch_px: f64) -> bool {
    let dr = (a.row as f64 - b.row as f64) * pitch_px;
    let dc = (a.col as f64 - b.col as f64) * pitch_px;
    dr.hypot(dc) <= cfg.range_px
}

/// One loss trial. Always consumes exactly one draw from `rng`.
pub fn transmit<R: Rng + ?Sized>(
    _msg: &NetMessage,
    cfg: &NetConfig,
    rng: &mut R,
    stats: &mut LinkStats,
) -> Delivery {
    let dropped = rng.gen::<f64>() < cfg.loss_prob;
    stats.record(!dropped);
    if dropped {
        Delivery::Dropped
    } else {
        Delivery::Delivered
    }
}

/// Delivers each robot's message to every other robot in range. Trials run
/// in (sender, receiver) order; each inbox is ordered by sender id.
/// `positions[i]` and `outgoing[i]` belong to robot `i`.
pub fn broadcast_round<R: Rng + ?Sized>(
    positions: &[Cell],
    outgoing: &[NetMessage],
    cfg: &NetConfig,
    pitch_px: f64,
    rng: &mut R,
    stats: &mut NetStats,
) -> Vec<Vec<NetMessage>> {
    debug_assert_eq!(positions.len(), outgoing.len());
    let mut inboxes = vec![Vec::new(); positions.len()];
    for (i, msg) in outgoing.iter().enumerate() {
        for (j, inbox) in inboxes.iter_mut().enumerate() {
            if i == j || !in_range(positions[i], positions[j], cfg, pitch_px) {
                continue;
            }
            let link = stats.per_link.entry((i as u32, j as u32)).or_default();
            let outcome = transmit(msg, cfg, rng, link);
            stats.total.record(outcome == Delivery::Delivered);
            if outcome == Delivery::Delivered {
                inbox.push(*msg);
            }
        }
    }
    inboxes
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn msg(id: u32, pos: Cell) -> NetMessage {
        NetMessage {
            sender_id: id,
            tick: 0,
            pos,
            qvals: [0.0; 4],
        }
    }

    #[test]
    fn range_geometry() {
        let cfg = NetConfig::default();
        let a = Cell::new(0, 0);
        assert!(in_range(a, a, &NetConfig { range_px: 1e-9, ..cfg }, 100.0));
        assert!(in_range(a, Cell::new(0, 15), &cfg, 100.0));
        assert!(!in_range(a, Cell::new(15, 15), &cfg, 100.0));
    }

    #[test]
    fn codec() {
        let zero = msg(0, Cell::new(0, 0));
        let bytes = zero.encode();
        assert_eq!(bytes.len(), MESSAGE_LEN);
        assert_eq!(&bytes[0..4], b"SWQM");
        assert_eq!(NetMessage::decode(&bytes).unwrap(), zero);

        let m = NetMessage {
            sender_id: 3,
            tick: 12345,
            pos: Cell::new(15, 7),
            qvals: [-1.25, 0.5, 0.0, 3.0],
        };
        assert_eq!(NetMessage::decode(&m.encode()).unwrap(), m);
        assert_eq!(
            NetMessage::decode(&bytes[..MESSAGE_LEN - 1]),
            Err(NetError::BadLength(MESSAGE_LEN - 1))
        );
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(NetMessage::decode(&bad), Err(NetError::BadMagic(_))));
    }

    #[test]
    fn loss_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = msg(0, Cell::new(0, 0));
        let mut stats = LinkStats::default();
        for _ in 0..100 {
            assert_eq!(transmit(&m, &NetConfig::default(), &mut rng, &mut stats), Delivery::Delivered);
        }
        let lossy = NetConfig {
            loss_prob: 1.0,
            ..NetConfig::default()
        };
        for _ in 0..100 {
            assert_eq!(transmit(&m, &lossy, &mut rng, &mut stats), Delivery::Dropped);
        }
        assert_eq!(stats.sent, 200);
        assert_eq!(stats.delivered, 100);
        assert!(stats.is_consistent());
    }

    #[test]
    fn corner_broadcast() {
        let corners = [Cell::new(0, 0), Cell::new(0, 15), Cell::new(15, 0), Cell::new(15, 15)];
        let out: Vec<_> = corners.iter().enumerate().map(|(i, &c)| msg(i as u32, c)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut stats = NetStats::default();
        let inboxes = broadcast_round(&corners, &out, &NetConfig::default(), 100.0, &mut rng, &mut stats);
        for inbox in &inboxes {
            assert_eq!(inbox.len(), 2);
        }
        assert_eq!(inboxes[0].iter().map(|m| m.sender_id).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(stats.total.sent, 8);
        assert!(stats.is_consistent());

        let near = [Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 0), Cell::new(1, 1)];
        let inboxes = broadcast_round(&near, &out, &NetConfig::default(), 100.0, &mut rng, &mut stats);
        assert!(inboxes.iter().all(|i| i.len() == 3));
        let tiny = NetConfig {
            range_px: 50.0,
            ..NetConfig::default()
        };
        let inboxes = broadcast_round(&near, &out, &tiny, 100.0, &mut rng, &mut stats);
        assert!(inboxes.iter().all(|i| i.is_empty()));
    }

    #[test]
    fn budget_and_lag() {
        let cfg = NetConfig::default();
        assert_eq!(cfg.byte_budget(1.0), 6.75e6);
        assert_eq!(cfg.delivery_lag_ticks(0.1), 0);
        assert!(cfg.delivery_lag_ticks(1e-8) >= 1);
        assert!(NetConfig { loss_prob: 1.5, ..cfg }.validate().is_err());
    }
}
