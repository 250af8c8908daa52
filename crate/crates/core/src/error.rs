use thiserror::Error;

/// Errors produced while building or running a caching instance.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("subset {subset} is not an {expected}-subset of the caches")]
    InvalidSubset { subset: String, expected: u32 },

    #[error("duplicate subset {0} in association profile")]
    DuplicateSubset(String),

    #[error("profile assigns {actual} users but the parameters declare {expected}")]
    ProfileUserMismatch { expected: u32, actual: u32 },

    #[error("cyclic association requires K = c, got K={users} and c={caches}")]
    CyclicRequiresKEqualsC { users: u32, caches: u32 },

    #[error("subset {subset} has fewer than r={access_degree} members")]
    SubsetTooSmall { subset: String, access_degree: u32 },

    #[error("demand vector incomplete: {0}")]
    IncompleteDemandVector(String),

    #[error("decoding failed for user {user} at subset {subset} slot {slot}: {reason}")]
    DecodingFailure {
        user: String,
        subset: String,
        slot: usize,
        reason: String,
    },

    #[error("independent-set construction requires pairwise distinct demands")]
    RequiresDistinctDemands,

    #[error("independent set does not match the instance: {0}")]
    InstanceMismatch(String),

    #[error("operation requires access degree r=1, got r={0}")]
    WrongAccessDegree(u32),
}
