//! Board layout and placement scoring.
//!
//! All lengths are integer pixels on the board image. The object and every
//! target's hidden center zone are axis-aligned squares; an object's
//! off-target score is the number of its pixels that fall outside the center
//! zone of the target it was placed on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ZoneId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub zone_id: ZoneId,
    pub top_left_x_px: i32,
    pub top_left_y_px: i32,
}

/// Axis-aligned square in board pixels, half-open on the far edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Square {
    pub x: i32,
    pub y: i32,
    pub side: i32,
}

impl Square {
    pub fn new(x: i32, y: i32, side: i32) -> Self {
        Self { x, y, side }
    }

    pub fn area(&self) -> i64 {
        i64::from(self.side) * i64::from(self.side)
    }

    pub fn overlap_area(&self, other: &Square) -> i64 {
        let w = (self.x + self.side).min(other.x + other.side) - self.x.max(other.x);
        let h = (self.y + self.side).min(other.y + other.side) - self.y.max(other.y);
        if w <= 0 || h <= 0 {
            0
        } else {
            i64::from(w) * i64::from(h)
        }
    }

    pub fn contains(&self, other: &Square) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.x + other.side <= self.x + self.side
            && other.y + other.side <= self.y + self.side
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardGeometry {
    pub scale_px_per_cm: i32,
    pub board_side_px: i32,
    pub zone_side_px: i32,
    pub center_zone_side_px: i32,
    pub object_side_px: i32,
    pub zones: Vec<ZoneSpec>,
    pub task_order: Vec<ZoneId>,
}

impl Default for BoardGeometry {
    /// 45 cm board with six 4.5 cm targets at 10 px/cm. Zone 6 is the start
    /// zone and is never part of the visiting order.
    fn default() -> Self {
        let zone = |zone_id, x, y| ZoneSpec {
            zone_id,
            top_left_x_px: x,
            top_left_y_px: y,
        };
        Self {
            scale_px_per_cm: 10,
            board_side_px: 450,
            zone_side_px: 45,
            center_zone_side_px: 30,
            object_side_px: 30,
            zones: vec![
                zone(1, 40, 40),
                zone(2, 365, 40),
                zone(3, 202, 150),
                zone(4, 40, 365),
                zone(5, 365, 365),
                zone(6, 202, 300),
            ],
            task_order: vec![1, 2, 3, 4, 5],
        }
    }
}

impl BoardGeometry {
    pub const STEPS_PER_TRIAL: usize = 5;
    pub const ZONE_COUNT: usize = 6;

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if self.scale_px_per_cm <= 0 || self.board_side_px <= 0 {
            return bad("scale and board side must be positive".into());
        }
        if self.center_zone_side_px <= 0 || self.center_zone_side_px > self.zone_side_px {
            return bad("center zone must fit inside its zone".into());
        }
        if self.object_side_px != self.center_zone_side_px {
            return bad(format!(
                "object side {} must equal center zone side {}",
                self.object_side_px, self.center_zone_side_px
            ));
        }
        if self.zones.len() != Self::ZONE_COUNT {
            return bad(format!(
                "expected {} zones, got {}",
                Self::ZONE_COUNT,
                self.zones.len()
            ));
        }
        let board = Square::new(0, 0, self.board_side_px);
        for (i, z) in self.zones.iter().enumerate() {
            if self.zones[..i].iter().any(|o| o.zone_id == z.zone_id) {
                return bad(format!("duplicate zone id {}", z.zone_id));
            }
            if !board.contains(&self.zone_square_of(z)) {
                return bad(format!("zone {} extends past the board", z.zone_id));
            }
        }
        if self.task_order.len() != Self::STEPS_PER_TRIAL {
            return bad(format!(
                "task order must list {} zones, got {}",
                Self::STEPS_PER_TRIAL,
                self.task_order.len()
            ));
        }
        for (i, id) in self.task_order.iter().enumerate() {
            if self.task_order[..i].contains(id) {
                return bad(format!("zone {id} appears twice in task order"));
            }
            if self.zone(*id).is_none() {
                return bad(format!("task order names unknown zone {id}"));
            }
        }
        Ok(())
    }

    pub fn zone(&self, zone_id: ZoneId) -> Option<&ZoneSpec> {
        self.zones.iter().find(|z| z.zone_id == zone_id)
    }

    /// The painted zone that is not visited by the task; the object rests
    /// there before the first pick.
    pub fn start_zone(&self) -> Option<ZoneId> {
        self.zones
            .iter()
            .map(|z| z.zone_id)
            .find(|id| !self.task_order.contains(id))
    }

    fn zone_square_of(&self, z: &ZoneSpec) -> Square {
        Square::new(z.top_left_x_px, z.top_left_y_px, self.zone_side_px)
    }

    pub fn zone_square(&self, zone_id: ZoneId) -> Result<Square> {
        self.zone(zone_id)
            .map(|z| self.zone_square_of(z))
            .ok_or(Error::InvalidZone(zone_id))
    }

    /// Hidden center zone of a target. The inset is floored when the side
    /// difference is odd.
    pub fn center_square(&self, zone_id: ZoneId) -> Result<Square> {
        let zone = self.zone_square(zone_id)?;
        let inset = (self.zone_side_px - self.center_zone_side_px) / 2;
        Ok(Square::new(
            zone.x + inset,
            zone.y + inset,
            self.center_zone_side_px,
        ))
    }

    pub fn object_square(&self, x: i32, y: i32) -> Square {
        Square::new(x, y, self.object_side_px)
    }

    pub fn object_area(&self) -> u32 {
        (self.object_side_px * self.object_side_px) as u32
    }

    pub fn board_square(&self) -> Square {
        Square::new(0, 0, self.board_side_px)
    }
}

/// Number of object pixels outside the center zone of `zone_id` when the
/// object's top-left corner sits at `(object_x_px, object_y_px)`.
pub fn off_target_score(
    object_x_px: i32,
    object_y_px: i32,
    zone_id: ZoneId,
    geometry: &BoardGeometry,
) -> Result<u32> {
    let center = geometry.center_square(zone_id)?;
    let object = geometry.object_square(object_x_px, object_y_px);
    if !geometry.board_square().contains(&object) {
        return Err(Error::OutOfBounds {
            x: object_x_px,
            y: object_y_px,
        });
    }
    Ok((object.area() - object.overlap_area(&center)) as u32)
}
