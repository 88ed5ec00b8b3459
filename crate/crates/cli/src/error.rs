use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Core(#[from] radonreg::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use radonreg::Error as E;
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(E::UnknownProfile(_) | E::InvalidParameter { .. } | E::Unsupported(_) | E::NotAdmissible { .. }) => 2,
            CliError::Data(_) | CliError::Io(_) | CliError::Core(_) => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Verification("x".into()).exit_code(), 1);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(radonreg::Error::UnknownProfile("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(radonreg::Error::Data("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(radonreg::Error::Singular).exit_code(), 3);
    }
}
