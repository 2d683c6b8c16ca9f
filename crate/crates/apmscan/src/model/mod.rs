//! The normalized program model: a small bytecode-like IR plus manifest and
//! layout data, loaded from a versioned JSON format.
//!
//! All analyses in this crate operate on a [`ProgramModel`]. A model is
//! immutable once loaded; analyses take it by shared reference and any number
//! of concurrent readers is safe.

mod load;
mod validate;

pub use load::{load_program_model, parse_program_model, save_program_model, ModelError};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Current version of the on-disk model schema.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// A fully-qualified dotted type name, e.g. `android.app.Activity`.
///
/// Never empty and never contains whitespace or signature-grammar
/// metacharacters (enforced by the validator).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeRef(String);

impl TypeRef {
    pub fn new(name: impl Into<String>) -> Self {
        TypeRef(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TypeRef {
    fn from(s: &str) -> Self {
        TypeRef::new(s)
    }
}

/// A register index. Parameters of a method occupy registers `0..params.len()`.
pub type Reg = u32;

/// A reference to a method: host type, name, parameter types and return type.
///
/// Serialized in the compact text form `host#name(p1,p2)ret`, which is also
/// used in profile files, signature indexes and reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodRef {
    pub host: TypeRef,
    pub name: String,
    pub params: Vec<TypeRef>,
    pub ret: TypeRef,
}

impl MethodRef {
    pub fn new(
        host: impl Into<String>,
        name: impl Into<String>,
        params: Vec<TypeRef>,
        ret: impl Into<String>,
    ) -> Self {
        MethodRef {
            host: TypeRef::new(host),
            name: name.into(),
            params,
            ret: TypeRef::new(ret),
        }
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}(", self.host, self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "){}", self.ret)
    }
}

/// Error produced when parsing the compact `host#name(params)ret` form.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed method reference `{0}`")]
pub struct MethodRefParseError(pub String);

impl FromStr for MethodRef {
    type Err = MethodRefParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MethodRefParseError(s.to_string());
        let (host, rest) = s.split_once('#').ok_or_else(bad)?;
        let (name, rest) = rest.split_once('(').ok_or_else(bad)?;
        let (params, ret) = rest.rsplit_once(')').ok_or_else(bad)?;
        if host.is_empty() || name.is_empty() || ret.is_empty() {
            return Err(bad());
        }
        let params = if params.is_empty() {
            Vec::new()
        } else {
            params.split(',').map(TypeRef::from).collect()
        };
        Ok(MethodRef {
            host: TypeRef::new(host),
            name: name.to_string(),
            params,
            ret: TypeRef::new(ret),
        })
    }
}

impl Serialize for MethodRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MethodRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One instruction of the bytecode-like IR.
///
/// Bodies are flat ordered lists. Encoded on disk as tagged objects with the
/// tag field `op` (kebab-case variant names).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Instruction {
    ConstString {
        dst: Reg,
        literal: String,
    },
    ConstOther {
        dst: Reg,
        #[serde(rename = "type")]
        ty: TypeRef,
    },
    Move {
        dst: Reg,
        src: Reg,
    },
    Concat {
        dst: Reg,
        a: Reg,
        b: Reg,
    },
    Invoke {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dst: Option<Reg>,
        callee: MethodRef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        receiver: Option<Reg>,
        #[serde(default)]
        args: Vec<Reg>,
    },
    FieldPut {
        owner: TypeRef,
        field: String,
        src: Reg,
    },
    FieldGet {
        dst: Reg,
        owner: TypeRef,
        field: String,
    },
    FindView {
        dst: Reg,
        resource: String,
    },
    NewIntent {
        dst: Reg,
    },
    IntentSetTargetClass {
        intent: Reg,
        src: Reg,
    },
    IntentSetAction {
        intent: Reg,
        src: Reg,
    },
    PutExtra {
        intent: Reg,
        key: Reg,
        value: Reg,
    },
    GetExtra {
        dst: Reg,
        key: Reg,
    },
    StartComponent {
        intent: Reg,
    },
    Return {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        src: Option<Reg>,
    },
}

impl Instruction {
    /// Register written by this instruction, if any.
    pub fn defined_reg(&self) -> Option<Reg> {
        use Instruction::*;
        match self {
            ConstString { dst, .. }
            | ConstOther { dst, .. }
            | Move { dst, .. }
            | Concat { dst, .. }
            | FieldGet { dst, .. }
            | FindView { dst, .. }
            | NewIntent { dst }
            | GetExtra { dst, .. } => Some(*dst),
            Invoke { dst, .. } => *dst,
            _ => None,
        }
    }

    /// Registers read by this instruction, in operand order.
    pub fn read_regs(&self) -> Vec<Reg> {
        use Instruction::*;
        match self {
            Move { src, .. } => vec![*src],
            Concat { a, b, .. } => vec![*a, *b],
            Invoke { receiver, args, .. } => {
                let mut r: Vec<Reg> = receiver.iter().copied().collect();
                r.extend(args.iter().copied());
                r
            }
            FieldPut { src, .. } => vec![*src],
            IntentSetTargetClass { intent, src } | IntentSetAction { intent, src } => {
                vec![*intent, *src]
            }
            PutExtra { intent, key, value } => vec![*intent, *key, *value],
            GetExtra { key, .. } => vec![*key],
            StartComponent { intent } => vec![*intent],
            Return { src } => src.iter().copied().collect(),
            _ => Vec::new(),
        }
    }
}

/// A method definition with its instruction body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodDef {
    pub name: String,
    #[serde(default)]
    pub params: Vec<TypeRef>,
    #[serde(rename = "return")]
    pub ret: TypeRef,
    /// System type whose callback this method overrides, when it does.
    /// Renaming transforms keep such method names fixed, mirroring how
    /// real obfuscators must preserve framework entry points.
    #[serde(rename = "overrides", default, skip_serializing_if = "Option::is_none")]
    pub declared_overrides: Option<TypeRef>,
    #[serde(default)]
    pub body: Vec<Instruction>,
}

impl MethodDef {
    pub fn method_ref(&self, host: &TypeRef) -> MethodRef {
        MethodRef {
            host: host.clone(),
            name: self.name.clone(),
            params: self.params.clone(),
            ret: self.ret.clone(),
        }
    }
}

/// Whether a class belongs to the app proper or to an embedded third-party
/// library shipped inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassOrigin {
    #[default]
    App,
    EmbeddedLibrary,
}

/// A class (or interface; the model does not distinguish them).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDef {
    pub name: TypeRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superclass: Option<TypeRef>,
    #[serde(default)]
    pub interfaces: Vec<TypeRef>,
    #[serde(default)]
    pub methods: Vec<MethodDef>,
    #[serde(default)]
    pub origin: ClassOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Activity,
    Service,
    Receiver,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentKind::Activity => f.write_str("activity"),
            ComponentKind::Service => f.write_str("service"),
            ComponentKind::Receiver => f.write_str("receiver"),
        }
    }
}

/// A declared app component with its intent-filter action strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentDecl {
    pub name: TypeRef,
    pub kind: ComponentKind,
    #[serde(default)]
    pub intent_filters: Vec<String>,
}

/// Manifest data: components, permissions, SDK levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestModel {
    #[serde(default)]
    pub components: Vec<ComponentDecl>,
    #[serde(default)]
    pub permissions: Vec<String>,
    pub min_sdk: u32,
    pub target_sdk: u32,
}

impl ManifestModel {
    /// Permission names normalized by stripping the `android.permission.`
    /// prefix, so manifests may use either the full or the short form.
    pub fn normalized_permissions(&self) -> Vec<String> {
        self.permissions
            .iter()
            .map(|p| {
                p.strip_prefix("android.permission.")
                    .unwrap_or(p)
                    .to_string()
            })
            .collect()
    }
}

/// One flattened layout element: id, widget kind, visible label, hint text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiElement {
    pub id: String,
    pub widget: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub hint: String,
}

/// The analysis universe: classes keyed by name, the manifest, and layouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramModel {
    pub classes: BTreeMap<TypeRef, ClassDef>,
    pub manifest: ManifestModel,
    pub layouts: Vec<UiElement>,
}

impl ProgramModel {
    pub fn new(classes: Vec<ClassDef>, manifest: ManifestModel, layouts: Vec<UiElement>) -> Self {
        let classes = classes.into_iter().map(|c| (c.name.clone(), c)).collect();
        ProgramModel {
            classes,
            manifest,
            layouts,
        }
    }

    pub fn class(&self, name: &TypeRef) -> Option<&ClassDef> {
        self.classes.get(name)
    }

    /// Looks up the method a `MethodRef` names, in its host class only
    /// (no hierarchy walk). Matching is on name and parameter types.
    pub fn resolve_method(&self, mref: &MethodRef) -> Option<&MethodDef> {
        self.classes.get(&mref.host).and_then(|c| {
            c.methods
                .iter()
                .find(|m| m.name == mref.name && m.params == mref.params)
        })
    }

    /// All methods in deterministic order (class name, then declaration order).
    pub fn iter_methods(&self) -> impl Iterator<Item = (MethodRef, &MethodDef)> {
        self.classes.values().flat_map(|c| {
            c.methods
                .iter()
                .map(move |m| (m.method_ref(&c.name), m))
        })
    }

    pub fn method_count(&self) -> usize {
        self.classes.values().map(|c| c.methods.len()).sum()
    }

    /// Walks the superclass chain starting at `name` (inclusive), yielding
    /// app-defined classes until the chain leaves the model. Stops if a
    /// cycle is encountered.
    pub fn superclass_chain<'a>(&'a self, name: &TypeRef) -> Vec<&'a ClassDef> {
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut cur = Some(name.clone());
        while let Some(ty) = cur {
            if !seen.insert(ty.clone()) {
                break;
            }
            match self.classes.get(&ty) {
                Some(c) => {
                    out.push(c);
                    cur = c.superclass.clone();
                }
                None => break,
            }
        }
        out
    }

    /// True when `name`'s superclass chain reaches the given (system) type.
    pub fn extends_transitively(&self, name: &TypeRef, ancestor: &TypeRef) -> bool {
        if name == ancestor {
            return true;
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut cur = self.classes.get(name).and_then(|c| c.superclass.clone());
        while let Some(ty) = cur {
            if ty == *ancestor {
                return true;
            }
            if !seen.insert(ty.clone()) {
                break;
            }
            cur = self.classes.get(&ty).and_then(|c| c.superclass.clone());
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_ref_round_trips_through_text_form() {
        let m = MethodRef::new(
            "android.util.Log",
            "d",
            vec!["java.lang.String".into(), "java.lang.String".into()],
            "int",
        );
        let text = m.to_string();
        assert_eq!(text, "android.util.Log#d(java.lang.String,java.lang.String)int");
        assert_eq!(text.parse::<MethodRef>().unwrap(), m);
    }

    #[test]
    fn method_ref_no_params() {
        let m: MethodRef = "a.B#run()void".parse().unwrap();
        assert!(m.params.is_empty());
        assert_eq!(m.ret, TypeRef::new("void"));
    }

    #[test]
    fn method_ref_rejects_garbage() {
        assert!("no-hash-here".parse::<MethodRef>().is_err());
        assert!("a.B#m(".parse::<MethodRef>().is_err());
        assert!("a.B#m()".parse::<MethodRef>().is_err());
    }

    #[test]
    fn instruction_tags_use_kebab_case() {
        let i = Instruction::IntentSetTargetClass { intent: 0, src: 1 };
        let v = serde_json::to_value(&i).unwrap();
        assert_eq!(v["op"], "intent-set-target-class");
    }
}
