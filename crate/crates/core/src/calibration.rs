//! Parameter counting for the three-axis multi-position calibration.
//!
//! Each orientation yields three number-difference readings. The unknowns are
//! the three components of the applied rotation, the three misalignment
//! angles of the triad, and the nuisance parameters of every repositioning.

use std::fmt;

/// How the sensor is turned between orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationAxis {
    /// About the externally fixed axis of the applied rotation: one unknown
    /// angle per repositioning.
    #[default]
    Common,
    /// About an arbitrary axis: three unknown angles per repositioning.
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub orientations: u32,
    pub include_external_frame: bool,
    pub rotation_axis: RotationAxis,
    pub parameter_count: u32,
    pub measurement_count: u32,
    pub feasible: bool,
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "K={} measurements={} parameters={} feasible={}",
            self.orientations, self.measurement_count, self.parameter_count, self.feasible
        )
    }
}

const RATE_COMPONENTS: u32 = 3;
const MISALIGNMENT_ANGLES: u32 = 3;
const FRAME_ANGLES: u32 = 3;

pub fn feasibility(k: u32, include_frame: bool, axis: RotationAxis) -> FeasibilityReport {
    let repositionings = k.saturating_sub(1);
    let per_rotation = match axis {
        RotationAxis::Common => 1,
        RotationAxis::Arbitrary => 3,
    };
    let parameter_count = RATE_COMPONENTS
        + MISALIGNMENT_ANGLES
        + per_rotation * repositionings
        + if include_frame { FRAME_ANGLES } else { 0 };
    let measurement_count = 3 * k;
    FeasibilityReport {
        orientations: k,
        include_external_frame: include_frame,
        rotation_axis: axis,
        parameter_count,
        measurement_count,
        feasible: k >= 1 && measurement_count >= parameter_count,
    }
}

/// Counting for rotations about the common axis: `3K` readings against
/// `K + 5` unknowns (`K + 8` with the external frame).
pub fn feasibility_3d(k: u32, include_frame: bool) -> FeasibilityReport {
    feasibility(k, include_frame, RotationAxis::Common)
}

/// Smallest number of orientations that makes the calibration determined, or
/// `None` when no number does.
pub fn min_orientations_for(include_frame: bool, axis: RotationAxis) -> Option<u32> {
    match axis {
        // 3K >= K + c  <=>  K >= c / 2
        RotationAxis::Common => {
            let c = feasibility(1, include_frame, axis).parameter_count - 1;
            Some(c.div_ceil(2).max(1))
        }
        // 3K against 3K + 3 (+3): always three short.
        RotationAxis::Arbitrary => None,
    }
}

pub fn min_orientations(include_frame: bool) -> u32 {
    min_orientations_for(include_frame, RotationAxis::Common)
        .expect("common-axis counting always closes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = feasibility_3d(3, false);
        assert_eq!(
            (r.measurement_count, r.parameter_count, r.feasible),
            (9, 8, true)
        );
        assert_eq!(
            r.to_string(),
            "K=3 measurements=9 parameters=8 feasible=true"
        );

        let r = feasibility_3d(4, true);
        assert_eq!(
            (r.measurement_count, r.parameter_count, r.feasible),
            (12, 12, true)
        );

        let r = feasibility_3d(2, false);
        assert_eq!(
            (r.measurement_count, r.parameter_count, r.feasible),
            (6, 7, false)
        );
    }

    #[test]
    fn minimum_orientations() {
        assert_eq!(min_orientations(false), 3);
        assert_eq!(min_orientations(true), 4);
        for f in [false, true] {
            assert!(!feasibility_3d(min_orientations(f) - 1, f).feasible);
        }
    }

    #[test]
    fn threshold_is_unique_and_monotone() {
        for f in [false, true] {
            let min = min_orientations(f);
            for k in 1..50 {
                let r = feasibility_3d(k, f);
                assert_eq!(r.feasible, k >= min, "k={k} frame={f}");
                assert_eq!(r.measurement_count, 3 * k);
                assert_eq!(r.parameter_count, k + 5 + if f { 3 } else { 0 });
            }
        }
    }

    #[test]
    fn arbitrary_axis_never_closes() {
        for f in [false, true] {
            assert_eq!(min_orientations_for(f, RotationAxis::Arbitrary), None);
            for k in 1..50 {
                let r = feasibility(k, f, RotationAxis::Arbitrary);
                assert!(!r.feasible);
                assert_eq!(
                    r.parameter_count - r.measurement_count,
                    if f { 6 } else { 3 }
                );
            }
        }
    }
}
