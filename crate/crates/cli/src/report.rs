//! Per-stage counts, timings and diversity of the final grasp set.

use graspgen_core::geometry::axial_distance;
use graspgen_core::synthesis::GraspCandidate;
use serde::{Deserialize, Serialize};

use crate::export::StageCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    /// Mean distance between midpoints over all pairs of final grasps, in meters.
    pub mean_pairwise_midpoint_distance: f64,
    /// Mean `acos |a . b|` over all pairs of final grasp axes, in radians.
    pub mean_pairwise_axial_distance: f64,
}

impl Diversity {
    pub fn of(grasps: &[GraspCandidate]) -> Self {
        let n = grasps.len();
        let (mut mid, mut ax, mut pairs) = (0.0, 0.0, 0usize);
        for a in 0..n {
            for b in a + 1..n {
                mid += grasps[a].pair.midpoint.distance(grasps[b].pair.midpoint);
                ax += axial_distance(grasps[a].pair.axis, grasps[b].pair.axis);
                pairs += 1;
            }
        }
        let mean = |s: f64| if pairs == 0 { 0.0 } else { s / pairs as f64 };
        Self {
            mean_pairwise_midpoint_distance: mean(mid),
            mean_pairwise_axial_distance: mean(ax),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub points_loaded: u64,
    pub points_used: u64,
    pub counts: StageCounts,
    pub timings: Vec<StageTiming>,
    pub diversity: Diversity,
}

impl StageReport {
    pub fn record(&mut self, stage: &str, millis: f64) {
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            millis,
        });
    }

    pub fn total_millis(&self) -> f64 {
        self.timings.iter().map(|t| t.millis).sum()
    }

    /// Human-readable summary for the terminal.
    pub fn summary(&self) -> String {
        let c = &self.counts;
        let mut s = format!(
            "points: {} loaded, {} used\n\
             pairs: {} total, {} within search radius\n\
             after stroke: {}\nafter friction: {}\nafter collision: {}\nafter clustering: {}\n",
            self.points_loaded,
            self.points_used,
            c.pre_filter,
            c.evaluated,
            c.post_stroke,
            c.post_friction,
            c.post_collision,
            c.post_clustering
        );
        for t in &self.timings {
            s.push_str(&format!("{:>12}: {:.1} ms\n", t.stage, t.millis));
        }
        s.push_str(&format!(
            "diversity: mean midpoint distance {:.4} m, mean axial distance {:.4} rad\n",
            self.diversity.mean_pairwise_midpoint_distance, self.diversity.mean_pairwise_axial_distance
        ));
        s
    }
}
