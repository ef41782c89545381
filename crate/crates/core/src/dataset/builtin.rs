use super::{FeatureSchema, FeatureSpec};

/// Names accepted by [`builtin_schema`].
pub const BUILTIN_TABULAR: [&str; 3] = ["german", "adult", "lsac"];

/// Schemas for the public benchmark datasets, with their sensitive features marked.
/// Column names follow the commonly distributed CSV exports; the data files
/// themselves are not bundled.
pub fn builtin_schema(name: &str) -> Option<FeatureSchema> {
    let schema = match name {
        "german" => FeatureSchema {
            features: vec![
                FeatureSpec::categorical("existingchecking"),
                FeatureSpec::numeric("duration"),
                FeatureSpec::categorical("credithistory"),
                FeatureSpec::categorical("purpose"),
                FeatureSpec::numeric("creditamount"),
                FeatureSpec::categorical("savings"),
                FeatureSpec::categorical("employmentsince"),
                FeatureSpec::numeric("installmentrate"),
                FeatureSpec::categorical("statussex").sensitive(),
                FeatureSpec::categorical("otherdebtors"),
                FeatureSpec::numeric("residencesince"),
                FeatureSpec::categorical("property"),
                FeatureSpec::numeric("age"),
                FeatureSpec::categorical("otherinstallmentplans"),
                FeatureSpec::categorical("housing"),
                FeatureSpec::numeric("existingcredits"),
                FeatureSpec::categorical("job"),
                FeatureSpec::numeric("peopleliable"),
                FeatureSpec::categorical("telephone").sensitive(),
                FeatureSpec::categorical("foreignworker").sensitive(),
            ],
            label_name: "classification".into(),
            positive_label: "1".into(),
        },
        "adult" => FeatureSchema {
            features: vec![
                FeatureSpec::numeric("age"),
                FeatureSpec::categorical("workclass"),
                FeatureSpec::numeric("fnlwgt"),
                FeatureSpec::categorical("education"),
                FeatureSpec::numeric("education-num"),
                FeatureSpec::categorical("marital-status").sensitive(),
                FeatureSpec::categorical("occupation"),
                FeatureSpec::categorical("relationship"),
                FeatureSpec::categorical("race").sensitive(),
                FeatureSpec::categorical("sex").sensitive(),
                FeatureSpec::numeric("capital-gain"),
                FeatureSpec::numeric("capital-loss"),
                FeatureSpec::numeric("hours-per-week"),
                FeatureSpec::categorical("native-country"),
            ],
            label_name: "income".into(),
            positive_label: ">50K".into(),
        },
        "lsac" => FeatureSchema {
            features: vec![
                FeatureSpec::numeric("decile1b"),
                FeatureSpec::numeric("decile3"),
                FeatureSpec::numeric("lsat"),
                FeatureSpec::numeric("ugpa"),
                FeatureSpec::numeric("zfygpa"),
                FeatureSpec::numeric("zgpa"),
                FeatureSpec::categorical("fulltime"),
                FeatureSpec::categorical("family_income").sensitive(),
                FeatureSpec::categorical("sex").sensitive(),
                FeatureSpec::categorical("race").sensitive(),
                FeatureSpec::categorical("tier"),
            ],
            label_name: "pass_bar".into(),
            positive_label: "1".into(),
        },
        _ => return None,
    };
    Some(schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_counts_and_sensitive_sets() {
        let german = builtin_schema("german").unwrap();
        assert_eq!(german.len(), 20);
        assert_eq!(german.sensitive_names(), vec!["statussex", "telephone", "foreignworker"]);
        assert_eq!(builtin_schema("adult").unwrap().len(), 14);
        let lsac = builtin_schema("lsac").unwrap();
        assert_eq!(lsac.len(), 11);
        assert_eq!(lsac.sensitive_names().len(), 3);
        for name in BUILTIN_TABULAR {
            builtin_schema(name).unwrap().validate().unwrap();
        }
        assert!(builtin_schema("mnist").is_none());
    }
}
