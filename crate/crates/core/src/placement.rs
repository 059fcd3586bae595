//! Inverse of off-target scoring: which per-step scores can occur, how to
//! split a trial total into achievable step scores, and where to put the
//! object to produce a given score.

use crate::error::{Error, Result};
use crate::geometry::{off_target_score, BoardGeometry, ZoneId};

#[derive(Debug, Clone)]
pub struct PlacementSolver {
    side: i32,
    area: u32,
    steps: usize,
    /// overlap area -> (overlap width, overlap height) pairs
    factors: Vec<Vec<(i32, i32)>>,
    achievable: Vec<u32>,
    /// reach[k][s]: `s` is a sum of `k` achievable step scores
    reach: Vec<Vec<bool>>,
}

impl PlacementSolver {
    pub fn new(geometry: &BoardGeometry) -> Self {
        let side = geometry.object_side_px;
        let area = geometry.object_area();
        let mut factors = vec![Vec::new(); area as usize + 1];
        for a in 0..=side {
            for b in 0..=side {
                factors[(a * b) as usize].push((a, b));
            }
        }
        let achievable: Vec<u32> = (0..=area)
            .filter(|off| !factors[(area - off) as usize].is_empty())
            .collect();
        let steps = geometry.task_order.len();
        let max = area as usize * steps;
        let mut reach = vec![vec![false; max + 1]];
        reach[0][0] = true;
        for k in 1..=steps {
            let prev = &reach[k - 1];
            let mut cur = vec![false; max + 1];
            for (s, _) in prev.iter().enumerate().filter(|(_, r)| **r) {
                for &v in &achievable {
                    cur[s + v as usize] = true;
                }
            }
            reach.push(cur);
        }
        Self {
            side,
            area,
            steps,
            factors,
            achievable,
            reach,
        }
    }

    pub fn achievable_scores(&self) -> &[u32] {
        &self.achievable
    }

    pub fn is_achievable(&self, off: u32) -> bool {
        off <= self.area && !self.factors[(self.area - off) as usize].is_empty()
    }

    pub fn max_total(&self) -> u32 {
        self.area * self.steps as u32
    }

    pub fn is_reachable_total(&self, total: u32) -> bool {
        self.reach[self.steps]
            .get(total as usize)
            .copied()
            .unwrap_or(false)
    }

    /// Closest total that five placements can produce; ties go to the lower
    /// total. Very small totals are sparse because a slightly misplaced object
    /// already loses a whole row or column of pixels.
    pub fn nearest_reachable_total(&self, total: u32) -> u32 {
        let total = total.min(self.max_total());
        (0..=total)
            .map(|d| (total - d, total + d))
            .find_map(|(lo, hi)| {
                if self.is_reachable_total(lo) {
                    Some(lo)
                } else if self.is_reachable_total(hi) {
                    Some(hi)
                } else {
                    None
                }
            })
            .unwrap_or(0)
    }

    /// Splits `total` into one achievable score per step, each as close as
    /// the remaining budget allows to its share of the total.
    pub fn decompose(&self, total: u32, shares: &[f64]) -> Option<Vec<u32>> {
        if shares.len() != self.steps || !self.is_reachable_total(total) {
            return None;
        }
        let mut out = Vec::with_capacity(self.steps);
        let mut remaining = total;
        for i in 0..self.steps {
            let left_after = self.steps - i - 1;
            let weight_left: f64 = shares[i..].iter().sum();
            let desired = if weight_left > 0.0 {
                f64::from(remaining) * shares[i] / weight_left
            } else {
                f64::from(remaining) / (self.steps - i) as f64
            };
            let pick = self
                .achievable
                .iter()
                .copied()
                .filter(|&v| v <= remaining && self.reach[left_after][(remaining - v) as usize])
                .min_by(|a, b| {
                    (f64::from(*a) - desired)
                        .abs()
                        .total_cmp(&(f64::from(*b) - desired).abs())
                })?;
            out.push(pick);
            remaining -= pick;
        }
        Some(out)
    }

    /// Object top-left corner on `zone_id` scoring exactly `off`. `choice`
    /// selects among the equivalent placements.
    pub fn placement(
        &self,
        zone_id: ZoneId,
        off: u32,
        choice: usize,
        geometry: &BoardGeometry,
    ) -> Result<(i32, i32)> {
        if !self.is_achievable(off) {
            return Err(Error::InvalidMetric(format!(
                "off-target score {off} cannot occur"
            )));
        }
        let center = geometry.center_square(zone_id)?;
        let pairs = &self.factors[(self.area - off) as usize];
        let (w, h) = pairs[choice % pairs.len()];
        let (dx, dy) = (self.side - w, self.side - h);
        let board = geometry.board_square();
        let signs = [(1, 1), (-1, 1), (1, -1), (-1, -1)];
        for k in 0..signs.len() {
            let (sx, sy) = signs[(choice / pairs.len() + k) % signs.len()];
            let (x, y) = (center.x + sx * dx, center.y + sy * dy);
            if board.contains(&geometry.object_square(x, y)) {
                debug_assert_eq!(off_target_score(x, y, zone_id, geometry), Ok(off));
                return Ok((x, y));
            }
        }
        Err(Error::OutOfBounds {
            x: center.x + dx,
            y: center.y + dy,
        })
    }
}
