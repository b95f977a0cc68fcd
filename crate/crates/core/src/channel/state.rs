use crate::error::{Error, Result};

/// Step-change state sequence: base state before ν, post-change state s from ν on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatePath {
    /// ν = ∞: the whole horizon is in the base state.
    BaseOnly,
    /// Change at symbol time `nu` (1-based) to `post_state`.
    Change { nu: u64, post_state: usize },
}

impl StatePath {
    pub fn change(nu: u64, post_state: usize) -> Result<Self> {
        if nu == 0 {
            return Err(Error::InvalidConfig("change point is 1-based".into()));
        }
        if post_state == 0 {
            return Err(Error::InvalidConfig("post-change state must differ from the base state".into()));
        }
        Ok(StatePath::Change { nu, post_state })
    }

    /// State in force at symbol time `i` (1-based).
    #[inline]
    pub fn state_at(&self, i: u64) -> usize {
        match *self {
            StatePath::BaseOnly => 0,
            StatePath::Change { nu, post_state } => {
                if i < nu {
                    0
                } else {
                    post_state
                }
            }
        }
    }

    pub fn change_point(&self) -> Option<u64> {
        match *self {
            StatePath::BaseOnly => None,
            StatePath::Change { nu, .. } => Some(nu),
        }
    }

    pub fn post_state(&self) -> Option<usize> {
        match *self {
            StatePath::BaseOnly => None,
            StatePath::Change { post_state, .. } => Some(post_state),
        }
    }

    /// Index (1-based) of the length-`frame` subblock containing ν.
    pub fn change_subblock(&self, frame: u64) -> Option<u64> {
        self.change_point().map(|nu| nu.div_ceil(frame))
    }
}
