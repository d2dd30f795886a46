//! Concrete robot instances and the reference motions for the squat and
//! walk tasks.

mod reference;

pub use reference::{squat_reference, walk_reference, ContactPhase, RefPose, ReferenceMotion, SQUAT_PERIOD, WALK_PERIOD};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::RobotModel;

const ROBOT_A: &str = include_str!("../../robots/robot_a.toml");
const ROBOT_B: &str = include_str!("../../robots/robot_b.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RobotVariant {
    A,
    B,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown robot variant `{0}` (expected A or B)")]
pub struct UnknownRobot(pub String);

impl FromStr for RobotVariant {
    type Err = UnknownRobot;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(RobotVariant::A),
            "B" | "b" => Ok(RobotVariant::B),
            other => Err(UnknownRobot(other.to_string())),
        }
    }
}

impl fmt::Display for RobotVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RobotVariant::A => "A",
            RobotVariant::B => "B",
        })
    }
}

impl RobotVariant {
    pub fn description(self) -> &'static str {
        match self {
            RobotVariant::A => ROBOT_A,
            RobotVariant::B => ROBOT_B,
        }
    }
}

/// Builds one of the shipped robots.
pub fn make_robot(variant: RobotVariant) -> RobotModel {
    RobotModel::from_toml_str(variant.description()).expect("shipped robot descriptions are valid")
}

/// Looks a robot up by name (`"A"`/`"B"`).
pub fn robot_by_name(name: &str) -> Result<RobotModel, UnknownRobot> {
    Ok(make_robot(name.parse()?))
}
