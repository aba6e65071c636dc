use core::fmt;
use core::str::FromStr;

pub const JOINT_COUNT: usize = 10;

/// The ten rhythmic joints modelled by the prior.
///
/// Discriminants give the canonical column order used by every file format:
/// joint-major, left before right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JointId {
    LeftHipPitch = 0,
    RightHipPitch,
    LeftKnee,
    RightKnee,
    LeftAnklePitch,
    RightAnklePitch,
    LeftShoulderPitch,
    RightShoulderPitch,
    LeftElbow,
    RightElbow,
}

impl JointId {
    pub const ALL: [JointId; JOINT_COUNT] = [
        JointId::LeftHipPitch,
        JointId::RightHipPitch,
        JointId::LeftKnee,
        JointId::RightKnee,
        JointId::LeftAnklePitch,
        JointId::RightAnklePitch,
        JointId::LeftShoulderPitch,
        JointId::RightShoulderPitch,
        JointId::LeftElbow,
        JointId::RightElbow,
    ];

    /// Left-side joints paired with their right-side partners.
    pub const CONTRALATERAL_PAIRS: [(JointId, JointId); JOINT_COUNT / 2] = [
        (JointId::LeftHipPitch, JointId::RightHipPitch),
        (JointId::LeftKnee, JointId::RightKnee),
        (JointId::LeftAnklePitch, JointId::RightAnklePitch),
        (JointId::LeftShoulderPitch, JointId::RightShoulderPitch),
        (JointId::LeftElbow, JointId::RightElbow),
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<JointId> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            JointId::LeftHipPitch => "left_hip_pitch",
            JointId::RightHipPitch => "right_hip_pitch",
            JointId::LeftKnee => "left_knee",
            JointId::RightKnee => "right_knee",
            JointId::LeftAnklePitch => "left_ankle_pitch",
            JointId::RightAnklePitch => "right_ankle_pitch",
            JointId::LeftShoulderPitch => "left_shoulder_pitch",
            JointId::RightShoulderPitch => "right_shoulder_pitch",
            JointId::LeftElbow => "left_elbow",
            JointId::RightElbow => "right_elbow",
        }
    }

    pub fn contralateral(self) -> JointId {
        let i = self.index();
        Self::ALL[i ^ 1]
    }

    pub fn is_left(self) -> bool {
        self.index().is_multiple_of(2)
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointId {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.iter().copied().find(|j| j.name() == s).ok_or(())
    }
}
