use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::Heads;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// One task per iteration: survival when the counter is odd, grade when even.
    #[default]
    Alternate,
    /// Both losses summed every iteration.
    JointAdd,
    SurvivalOnly,
    GradeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Survival,
    Grade,
    Both,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Survival => "survival",
            Task::Grade => "grade",
            Task::Both => "both",
        }
    }

    pub fn survival(self) -> bool {
        matches!(self, Task::Survival | Task::Both)
    }

    pub fn grade(self) -> bool {
        matches!(self, Task::Grade | Task::Both)
    }
}

impl Schedule {
    pub const ALL: [Schedule; 4] =
        [Schedule::Alternate, Schedule::JointAdd, Schedule::SurvivalOnly, Schedule::GradeOnly];

    pub fn name(self) -> &'static str {
        match self {
            Schedule::Alternate => "alternate",
            Schedule::JointAdd => "joint-add",
            Schedule::SurvivalOnly => "survival-only",
            Schedule::GradeOnly => "grade-only",
        }
    }

    /// Heads the schedule trains.
    pub fn required_heads(self) -> Heads {
        match self {
            Schedule::Alternate | Schedule::JointAdd => Heads::Both,
            Schedule::SurvivalOnly => Heads::Survival,
            Schedule::GradeOnly => Heads::Grade,
        }
    }

    pub fn compatible_with(self, heads: Heads) -> bool {
        let need = self.required_heads();
        (!need.survival() || heads.survival()) && (!need.grade() || heads.grade())
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Schedule::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown schedule '{s}'")))
    }
}

/// Task optimized at iteration `c` (counted from 1).
pub fn select_task(c: u64, schedule: Schedule) -> Result<Task> {
    if c == 0 {
        return Err(Error::Range("iteration counter starts at 1".into()));
    }
    Ok(match schedule {
        Schedule::Alternate if c % 2 == 1 => Task::Survival,
        Schedule::Alternate => Task::Grade,
        Schedule::JointAdd => Task::Both,
        Schedule::SurvivalOnly => Task::Survival,
        Schedule::GradeOnly => Task::Grade,
    })
}
