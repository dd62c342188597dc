//! Column layout of the NSL-KDD `KDDTrain+` / `KDDTest+` files.

/// How a raw column is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Categorical,
    Boolean,
    Continuous,
}

/// The 41 feature columns in file order. The label and the difficulty
/// score follow them on every line.
pub const FEATURES: [(&str, FeatureKind); 41] = {
    use FeatureKind::*;
    [
        ("duration", Continuous),
        ("protocol_type", Categorical),
        ("service", Categorical),
        ("flag", Categorical),
        ("src_bytes", Continuous),
        ("dst_bytes", Continuous),
        ("land", Boolean),
        ("wrong_fragment", Continuous),
        ("urgent", Continuous),
        ("hot", Continuous),
        ("num_failed_logins", Continuous),
        ("logged_in", Boolean),
        ("num_compromised", Continuous),
        ("root_shell", Continuous),
        ("su_attempted", Continuous),
        ("num_root", Continuous),
        ("num_file_creations", Continuous),
        ("num_shells", Continuous),
        ("num_access_files", Continuous),
        ("num_outbound_cmds", Continuous),
        ("is_host_login", Boolean),
        ("is_guest_login", Boolean),
        ("count", Continuous),
        ("srv_count", Continuous),
        ("serror_rate", Continuous),
        ("srv_serror_rate", Continuous),
        ("rerror_rate", Continuous),
        ("srv_rerror_rate", Continuous),
        ("same_srv_rate", Continuous),
        ("diff_srv_rate", Continuous),
        ("srv_diff_host_rate", Continuous),
        ("dst_host_count", Continuous),
        ("dst_host_srv_count", Continuous),
        ("dst_host_same_srv_rate", Continuous),
        ("dst_host_diff_srv_rate", Continuous),
        ("dst_host_same_src_port_rate", Continuous),
        ("dst_host_srv_diff_host_rate", Continuous),
        ("dst_host_serror_rate", Continuous),
        ("dst_host_srv_serror_rate", Continuous),
        ("dst_host_rerror_rate", Continuous),
        ("dst_host_srv_rerror_rate", Continuous),
    ]
};

/// Columns per line: 41 features, label, difficulty.
pub const COLUMNS: usize = FEATURES.len() + 2;

pub const N_CATEGORICAL: usize = 3;
pub const N_BOOLEAN: usize = 4;
pub const N_CONTINUOUS: usize = FEATURES.len() - N_CATEGORICAL - N_BOOLEAN;

fn names_of(kind: FeatureKind) -> impl Iterator<Item = &'static str> {
    FEATURES
        .iter()
        .filter(move |(_, k)| *k == kind)
        .map(|(name, _)| *name)
}

pub fn categorical_names() -> Vec<&'static str> {
    names_of(FeatureKind::Categorical).collect()
}

pub fn boolean_names() -> Vec<&'static str> {
    names_of(FeatureKind::Boolean).collect()
}

pub fn continuous_names() -> Vec<&'static str> {
    names_of(FeatureKind::Continuous).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_counts() {
        assert_eq!(categorical_names(), ["protocol_type", "service", "flag"]);
        assert_eq!(
            boolean_names(),
            ["land", "logged_in", "is_host_login", "is_guest_login"]
        );
        assert_eq!(continuous_names().len(), N_CONTINUOUS);
        assert_eq!(N_CONTINUOUS, 34);
        assert_eq!(COLUMNS, 43);
    }
}
