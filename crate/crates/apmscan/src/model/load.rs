//! Loading and saving the on-disk model format.
//!
//! The format is a UTF-8 JSON document with top-level keys `schema_version`,
//! `classes`, `manifest` and `layouts`. See `docs/MODEL-SCHEMA.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassDef, ManifestModel, ProgramModel, UiElement, MODEL_SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed JSON, with position information.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed JSON that does not satisfy the schema.
    #[error("schema error: {0}")]
    Schema(String),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    classes: Vec<ClassDef>,
    manifest: ManifestModel,
    #[serde(default)]
    layouts: Vec<UiElement>,
}

/// Parses a model from JSON text.
pub fn parse_program_model(text: &str) -> Result<ProgramModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(classify_json_error)?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(ModelError::Schema(format!(
            "unsupported schema_version {} (expected {})",
            file.schema_version, MODEL_SCHEMA_VERSION
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    for class in &file.classes {
        if !seen.insert(class.name.clone()) {
            return Err(ModelError::Schema(format!(
                "duplicate class name `{}`",
                class.name
            )));
        }
    }
    Ok(ProgramModel::new(file.classes, file.manifest, file.layouts))
}

/// Loads a model file. Referenced types that are neither defined in the model
/// nor system types are legal and treated as external-opaque by the analyses.
pub fn load_program_model(path: impl AsRef<Path>) -> Result<ProgramModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_program_model(&text)
}

/// Serializes a model back to the on-disk format (classes sorted by name).
pub fn save_program_model(model: &ProgramModel) -> String {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        classes: model.classes.values().cloned().collect(),
        manifest: model.manifest.clone(),
        layouts: model.layouts.clone(),
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

fn classify_json_error(e: serde_json::Error) -> ModelError {
    if e.is_syntax() || e.is_eof() {
        ModelError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    } else {
        // serde_json reports missing/mistyped fields as data errors; the
        // message names the offending field.
        ModelError::Schema(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "classes": [{"name": "a.Empty"}],
        "manifest": {"components": [], "permissions": [], "min_sdk": 21, "target_sdk": 30}
    }"#;

    #[test]
    fn minimal_model_loads() {
        let m = parse_program_model(MINIMAL).unwrap();
        assert_eq!(m.classes.len(), 1);
        assert_eq!(m.method_count(), 0);
    }

    #[test]
    fn duplicate_class_is_a_schema_error_naming_the_duplicate() {
        let text = r#"{
            "schema_version": 1,
            "classes": [{"name": "a.Dup"}, {"name": "a.Dup"}],
            "manifest": {"min_sdk": 1, "target_sdk": 1}
        }"#;
        let err = parse_program_model(text).unwrap_err();
        match err {
            ModelError::Schema(msg) => assert!(msg.contains("a.Dup"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error_with_position() {
        let err = parse_program_model("{ not json").unwrap_err();
        match err {
            ModelError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_required_field_is_a_schema_error_naming_the_field() {
        let text = r#"{"schema_version": 1, "classes": []}"#;
        let err = parse_program_model(text).unwrap_err();
        match err {
            ModelError::Schema(msg) => assert!(msg.contains("manifest"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let text = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(
            parse_program_model(&text),
            Err(ModelError::Schema(_))
        ));
    }

    #[test]
    fn save_then_load_round_trips() {
        let m = parse_program_model(MINIMAL).unwrap();
        let text = save_program_model(&m);
        let again = parse_program_model(&text).unwrap();
        assert_eq!(m, again);
    }
}
