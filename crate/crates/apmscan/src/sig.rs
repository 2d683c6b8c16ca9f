//! Canonical, rename-invariant signatures for types and methods.
//!
//! The encoding uses only structure that identifier renaming cannot touch:
//! inheritance chains into system types, interface sets, and the set of
//! system APIs a method (transitively) calls. App-defined names never appear
//! in an encoding; where a non-system name would be needed it is replaced by
//! the placeholder `x`.
//!
//! Text grammar (version [`SIG_GRAMMAR_VERSION`], see
//! `docs/SIGNATURE-FORMAT.md`):
//!
//! ```text
//! signature := typeenc "(" typeenc,* ")" typeenc "{" entry;* "}"
//! typeenc   := "x" | system-name | typeenc "[" typeenc,* "]"
//! entry     := signature | system-name "(" name,* ")" name | "@rec"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Instruction, MethodRef, ProgramModel, TypeRef};

/// Version of the signature text grammar. Stamped into index files; indexes
/// built under a different version are rejected.
pub const SIG_GRAMMAR_VERSION: u32 = 1;

/// Placeholder emitted wherever a non-system name would otherwise leak into
/// an encoding.
pub const OPAQUE_TOKEN: &str = "x";

/// Placeholder for a callee whose encoding is already in progress (call cycle).
pub const RECURSION_TOKEN: &str = "@rec";

/// Java primitive type names; encoded verbatim like system classes.
const PRIMITIVES: &[&str] = &[
    "void", "boolean", "byte", "short", "char", "int", "long", "float", "double",
];

/// Package prefixes considered part of the platform. Types under these
/// prefixes keep their names through obfuscation, so their names are stable
/// anchors for the encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemRegistry {
    prefixes: Vec<String>,
}

impl SystemRegistry {
    pub const DEFAULT_PREFIXES: &'static [&'static str] = &[
        "java.", "javax.", "android.", "androidx.", "kotlin.", "dalvik.",
    ];

    /// Builds a registry from explicit prefixes. Every prefix must be
    /// non-empty and end with `.`.
    pub fn new(prefixes: Vec<String>) -> Result<Self, SigError> {
        if prefixes.is_empty() {
            return Err(SigError::BadRegistry("prefix list is empty".into()));
        }
        for p in &prefixes {
            if p.is_empty() || !p.ends_with('.') {
                return Err(SigError::BadRegistry(format!(
                    "prefix `{p}` must be non-empty and end with `.`"
                )));
            }
        }
        Ok(SystemRegistry { prefixes })
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn is_system(&self, ty: &TypeRef) -> bool {
        let name = ty.as_str();
        PRIMITIVES.contains(&name) || self.prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }
}

impl Default for SystemRegistry {
    fn default() -> Self {
        SystemRegistry {
            prefixes: Self::DEFAULT_PREFIXES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SigError {
    #[error("invalid system registry: {0}")]
    BadRegistry(String),
    /// The validator catches hierarchy cycles; this is the defensive path.
    #[error("type hierarchy cycle while encoding `{0}`")]
    HierarchyCycle(TypeRef),
    #[error("method `{0}` does not resolve in the model")]
    UnresolvedMethod(MethodRef),
    #[error("malformed signature text at byte {at}: {message}")]
    Grammar { at: usize, message: String },
}

/// Canonical encoding of a type. Deterministic for a given
/// (type, model, registry) and free of app-defined identifiers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeEncoding(String);

impl TypeEncoding {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TypeEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical encoding of a method: host, parameters, return, and the sorted
/// deduplicated set of callee entries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignatureText(String);

impl SignatureText {
    pub fn new(text: impl Into<String>) -> Self {
        SignatureText(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SignatureText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Warning recorded when a callee cannot be resolved and is encoded opaquely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingWarning {
    pub method: MethodRef,
    pub callee: MethodRef,
}

/// Shared state for one encoding run: memoized signatures and the set of
/// methods currently being encoded (for call-cycle cut-off).
///
/// Only signatures whose computation never crossed an in-progress method are
/// memoized; anything on or above a call cycle is recomputed per top-level
/// request so that the text of a signature depends on nothing but the method
/// itself.
#[derive(Debug, Default)]
pub struct EncodingContext {
    memo: BTreeMap<MethodRef, SignatureText>,
    in_progress: BTreeSet<MethodRef>,
    warnings: Vec<EncodingWarning>,
}

impl EncodingContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn warnings(&self) -> &[EncodingWarning] {
        &self.warnings
    }
}

/// Encodes a type per the type-encoding rules: system types keep their name,
/// app-defined types become `superclass-encoding [ sorted interface
/// encodings ]` (brackets always present), external-opaque types become `x`.
///
/// The `_host` parameter (the class context the encoding is requested from)
/// is accepted but does not influence the result.
pub fn encode_type(
    _host: &TypeRef,
    target: &TypeRef,
    model: &ProgramModel,
    registry: &SystemRegistry,
) -> Result<TypeEncoding, SigError> {
    let mut visiting = BTreeSet::new();
    encode_type_rec(target, model, registry, &mut visiting).map(TypeEncoding)
}

fn encode_type_rec(
    target: &TypeRef,
    model: &ProgramModel,
    registry: &SystemRegistry,
    visiting: &mut BTreeSet<TypeRef>,
) -> Result<String, SigError> {
    if registry.is_system(target) {
        return Ok(target.as_str().to_string());
    }
    let Some(class) = model.classes.get(target) else {
        return Ok(OPAQUE_TOKEN.to_string());
    };
    if !visiting.insert(target.clone()) {
        return Err(SigError::HierarchyCycle(target.clone()));
    }
    // A class with no declared superclass implicitly extends java.lang.Object.
    let superclass = class
        .superclass
        .clone()
        .unwrap_or_else(|| TypeRef::new("java.lang.Object"));
    let mut text = encode_type_rec(&superclass, model, registry, visiting)?;
    let mut iface_encs = Vec::with_capacity(class.interfaces.len());
    for iface in &class.interfaces {
        iface_encs.push(encode_type_rec(iface, model, registry, visiting)?);
    }
    iface_encs.sort();
    iface_encs.dedup();
    text.push('[');
    text.push_str(&iface_encs.join(","));
    text.push(']');
    visiting.remove(target);
    Ok(text)
}

/// Builds the canonical signature of a method: host encoding, parameter
/// encodings in declaration order, return encoding, then the sorted
/// deduplicated callee entries. System callees contribute their verbatim
/// `host.name(argTypes)retType` entry (non-system arg/return names replaced
/// by `x`); non-system callees contribute their own full signature,
/// recursively. A callee already being encoded contributes [`RECURSION_TOKEN`].
pub fn method_signature(
    f: &MethodRef,
    model: &ProgramModel,
    registry: &SystemRegistry,
    ctx: &mut EncodingContext,
) -> Result<SignatureText, SigError> {
    debug_assert!(ctx.in_progress.is_empty());
    let (text, _) = signature_rec(f, model, registry, ctx)?;
    debug_assert!(ctx.in_progress.is_empty());
    Ok(SignatureText(text))
}

/// Resolves a callee reference to the method definition that would actually
/// run: the host class itself or the nearest ancestor defining the method.
fn resolve_up<'m>(model: &'m ProgramModel, mref: &MethodRef) -> Option<(MethodRef, &'m crate::model::MethodDef)> {
    for class in model.superclass_chain(&mref.host) {
        if let Some(m) = class
            .methods
            .iter()
            .find(|m| m.name == mref.name && m.params == mref.params)
        {
            return Some((m.method_ref(&class.name), m));
        }
    }
    None
}

fn signature_rec(
    f: &MethodRef,
    model: &ProgramModel,
    registry: &SystemRegistry,
    ctx: &mut EncodingContext,
) -> Result<(String, bool), SigError> {
    if let Some(hit) = ctx.memo.get(f) {
        return Ok((hit.as_str().to_string(), false));
    }

    let (f, body): (MethodRef, &[Instruction]) = if registry.is_system(&f.host) {
        // Degenerate case allowed by the contract: a system method has no
        // body in the model, so its callee set is empty.
        (f.clone(), &[])
    } else {
        match resolve_up(model, f) {
            Some((resolved, def)) => (resolved, &def.body),
            None => return Err(SigError::UnresolvedMethod(f.clone())),
        }
    };

    ctx.in_progress.insert(f.clone());
    let result = signature_body(&f, body, model, registry, ctx);
    ctx.in_progress.remove(&f);

    let (text, crossed_cycle) = result?;
    if !crossed_cycle {
        ctx.memo.insert(f, SignatureText(text.clone()));
    }
    Ok((text, crossed_cycle))
}

fn signature_body(
    f: &MethodRef,
    body: &[Instruction],
    model: &ProgramModel,
    registry: &SystemRegistry,
    ctx: &mut EncodingContext,
) -> Result<(String, bool), SigError> {
    let mut text = encode_type(&f.host, &f.host, model, registry)?.0;
    text.push('(');
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            text.push(',');
        }
        text.push_str(encode_type(&f.host, p, model, registry)?.as_str());
    }
    text.push(')');
    text.push_str(encode_type(&f.host, &f.ret, model, registry)?.as_str());

    let (entries, crossed_cycle) = callee_entry_set(f, body, model, registry, ctx)?;
    text.push('{');
    text.push_str(&entries.join(";"));
    text.push('}');
    Ok((text, crossed_cycle))
}

fn callee_entry_set(
    f: &MethodRef,
    body: &[Instruction],
    model: &ProgramModel,
    registry: &SystemRegistry,
    ctx: &mut EncodingContext,
) -> Result<(Vec<String>, bool), SigError> {
    let mut entries = Vec::new();
    let mut crossed_cycle = false;
    for instr in body {
        let Instruction::Invoke { callee, .. } = instr else {
            continue;
        };
        if registry.is_system(&callee.host) {
            entries.push(system_entry(callee, registry));
        } else if let Some((resolved, _)) = resolve_up(model, callee) {
            if ctx.in_progress.contains(&resolved) {
                entries.push(RECURSION_TOKEN.to_string());
                crossed_cycle = true;
            } else {
                let (sub, sub_cycle) = signature_rec(&resolved, model, registry, ctx)?;
                entries.push(sub);
                crossed_cycle |= sub_cycle;
            }
        } else {
            // Reference into an absent dependency: opaque entry, warn.
            entries.push(format!("{OPAQUE_TOKEN}(){OPAQUE_TOKEN}{{}}"));
            ctx.warnings.push(EncodingWarning {
                method: f.clone(),
                callee: callee.clone(),
            });
        }
    }
    // Sort and drop duplicates: callee order and multiplicity carry no signal.
    entries.sort();
    entries.dedup();
    Ok((entries, crossed_cycle))
}

/// Verbatim entry for a system callee. Any non-system type appearing among
/// its declared argument/return types is still masked with `x` so that no
/// renameable identifier can enter the signature.
fn system_entry(callee: &MethodRef, registry: &SystemRegistry) -> String {
    let name_of = |t: &TypeRef| {
        if registry.is_system(t) {
            t.as_str().to_string()
        } else {
            OPAQUE_TOKEN.to_string()
        }
    };
    let args: Vec<String> = callee.params.iter().map(|t| name_of(t)).collect();
    format!(
        "{}.{}({}){}",
        callee.host,
        callee.name,
        args.join(","),
        name_of(&callee.ret)
    )
}

/// The sorted, deduplicated callee entries of a method — the `{...}` part of
/// its signature. Detection matches library signatures against these.
pub fn callee_entries(
    f: &MethodRef,
    model: &ProgramModel,
    registry: &SystemRegistry,
    ctx: &mut EncodingContext,
) -> Result<Vec<String>, SigError> {
    let (f, body): (MethodRef, &[Instruction]) = match resolve_up(model, f) {
        Some((resolved, def)) => (resolved, &def.body),
        None => return Err(SigError::UnresolvedMethod(f.clone())),
    };
    ctx.in_progress.insert(f.clone());
    let result = callee_entry_set(&f, body, model, registry, ctx);
    ctx.in_progress.remove(&f);
    Ok(result?.0)
}

/// Exact canonical equality. There is deliberately no fuzzy matching.
pub fn canonical_compare(a: &SignatureText, b: &SignatureText) -> bool {
    a.as_str() == b.as_str()
}

// ---------------------------------------------------------------------------
// Signature grammar parser. Exists so the grammar is checkable: every
// signature the encoder emits parses back and re-serializes byte-identically.
// ---------------------------------------------------------------------------

/// Parsed form of a type encoding: a base atom plus bracket groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTypeEnc {
    pub base: String,
    pub groups: Vec<Vec<ParsedTypeEnc>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedCallee {
    Recursive,
    System {
        name: String,
        args: Vec<String>,
        ret: String,
    },
    Nested(Box<ParsedSignature>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSignature {
    pub host: ParsedTypeEnc,
    pub params: Vec<ParsedTypeEnc>,
    pub ret: ParsedTypeEnc,
    pub callees: Vec<ParsedCallee>,
}

impl fmt::Display for ParsedTypeEnc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        for group in &self.groups {
            f.write_str("[")?;
            for (i, t) in group.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl fmt::Display for ParsedCallee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParsedCallee::Recursive => f.write_str(RECURSION_TOKEN),
            ParsedCallee::System { name, args, ret } => {
                write!(f, "{name}({}){ret}", args.join(","))
            }
            ParsedCallee::Nested(sig) => write!(f, "{sig}"),
        }
    }
}

impl fmt::Display for ParsedSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.host)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "){}", self.ret)?;
        f.write_str("{")?;
        for (i, c) in self.callees.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

/// Parses a signature text. Fails on anything the encoder could not have
/// produced.
pub fn parse_signature(text: &str) -> Result<ParsedSignature, SigError> {
    let mut p = Parser { text, pos: 0 };
    let sig = p.signature()?;
    if p.pos != text.len() {
        return Err(p.err("trailing input"));
    }
    Ok(sig)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> SigError {
        SigError::Grammar {
            at: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> Result<(), SigError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn name(&mut self) -> Result<String, SigError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if "(){}[],;".contains(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        if self.pos == start {
            return Err(self.err("expected a name"));
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn type_enc(&mut self) -> Result<ParsedTypeEnc, SigError> {
        let base = self.name()?;
        let mut groups = Vec::new();
        while self.peek() == Some('[') {
            self.eat('[')?;
            let mut group = Vec::new();
            if self.peek() != Some(']') {
                loop {
                    group.push(self.type_enc()?);
                    if self.peek() == Some(',') {
                        self.eat(',')?;
                    } else {
                        break;
                    }
                }
            }
            self.eat(']')?;
            groups.push(group);
        }
        Ok(ParsedTypeEnc { base, groups })
    }

    fn signature(&mut self) -> Result<ParsedSignature, SigError> {
        let host = self.type_enc()?;
        self.eat('(')?;
        let mut params = Vec::new();
        if self.peek() != Some(')') {
            loop {
                params.push(self.type_enc()?);
                if self.peek() == Some(',') {
                    self.eat(',')?;
                } else {
                    break;
                }
            }
        }
        self.eat(')')?;
        let ret = self.type_enc()?;
        self.eat('{')?;
        let mut callees = Vec::new();
        if self.peek() != Some('}') {
            loop {
                callees.push(self.callee()?);
                if self.peek() == Some(';') {
                    self.eat(';')?;
                } else {
                    break;
                }
            }
        }
        self.eat('}')?;
        Ok(ParsedSignature {
            host,
            params,
            ret,
            callees,
        })
    }

    fn callee(&mut self) -> Result<ParsedCallee, SigError> {
        if self.text[self.pos..].starts_with(RECURSION_TOKEN) {
            self.pos += RECURSION_TOKEN.len();
            return Ok(ParsedCallee::Recursive);
        }
        // Both entry forms start `name(...)`; what follows the closing paren
        // and return decides: a `{` marks a nested signature.
        let save = self.pos;
        let host = self.type_enc()?;
        self.eat('(')?;
        if host.groups.is_empty() {
            // Could still be a system entry; try it first.
            self.pos = save;
            if let Ok(entry) = self.system_callee() {
                return Ok(entry);
            }
            self.pos = save;
        } else {
            self.pos = save;
        }
        let sig = self.signature()?;
        Ok(ParsedCallee::Nested(Box::new(sig)))
    }

    fn system_callee(&mut self) -> Result<ParsedCallee, SigError> {
        let name = self.name()?;
        self.eat('(')?;
        let mut args = Vec::new();
        if self.peek() != Some(')') {
            loop {
                let arg = self.name()?;
                if self.peek() == Some('[') {
                    return Err(self.err("bracket in system entry"));
                }
                args.push(arg);
                if self.peek() == Some(',') {
                    self.eat(',')?;
                } else {
                    break;
                }
            }
        }
        self.eat(')')?;
        let ret = self.name()?;
        // A nested signature would continue with `{`.
        if self.peek() == Some('{') {
            return Err(self.err("not a system entry"));
        }
        Ok(ParsedCallee::System { name, args, ret })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassDef, ManifestModel, MethodDef, ProgramModel};

    fn manifest() -> ManifestModel {
        ManifestModel {
            components: vec![],
            permissions: vec![],
            min_sdk: 21,
            target_sdk: 30,
        }
    }

    fn fixture() -> ProgramModel {
        // B extends Activity; C extends B implements I; I "extends" Runnable.
        let b = ClassDef {
            name: "app.B".into(),
            superclass: Some("android.app.Activity".into()),
            interfaces: vec![],
            methods: vec![MethodDef {
                name: "onCreate".into(),
                params: vec![],
                ret: "void".into(),
                declared_overrides: Some("android.app.Activity".into()),
                body: vec![
                    Instruction::ConstString { dst: 0, literal: "t".into() },
                    Instruction::ConstString { dst: 1, literal: "m".into() },
                    Instruction::Invoke {
                        dst: Some(2),
                        callee: MethodRef::new(
                            "android.util.Log",
                            "d",
                            vec!["java.lang.String".into(), "java.lang.String".into()],
                            "int",
                        ),
                        receiver: None,
                        args: vec![0, 1],
                    },
                    Instruction::Return { src: None },
                ],
            }],
            origin: Default::default(),
        };
        let i = ClassDef {
            name: "app.I".into(),
            superclass: Some("java.lang.Runnable".into()),
            interfaces: vec![],
            methods: vec![],
            origin: Default::default(),
        };
        let c = ClassDef {
            name: "app.C".into(),
            superclass: Some("app.B".into()),
            interfaces: vec!["app.I".into()],
            methods: vec![],
            origin: Default::default(),
        };
        ProgramModel::new(vec![b, i, c], manifest(), vec![])
    }

    #[test]
    fn system_type_encodes_to_its_own_name() {
        let model = fixture();
        let reg = SystemRegistry::default();
        let enc = encode_type(
            &"app.B".into(),
            &"android.app.Activity".into(),
            &model,
            &reg,
        )
        .unwrap();
        assert_eq!(enc.as_str(), "android.app.Activity");
    }

    #[test]
    fn app_type_encodes_superclass_and_bracketed_interfaces() {
        let model = fixture();
        let reg = SystemRegistry::default();
        let b = encode_type(&"app.B".into(), &"app.B".into(), &model, &reg).unwrap();
        assert_eq!(b.as_str(), "android.app.Activity[]");
        let c = encode_type(&"app.C".into(), &"app.C".into(), &model, &reg).unwrap();
        assert_eq!(c.as_str(), "android.app.Activity[][java.lang.Runnable[]]");
    }

    #[test]
    fn external_opaque_type_encodes_to_x() {
        let model = fixture();
        let reg = SystemRegistry::default();
        let enc = encode_type(&"app.B".into(), &"gone.T".into(), &model, &reg).unwrap();
        assert_eq!(enc.as_str(), "x");
    }

    #[test]
    fn primitives_count_as_system() {
        let reg = SystemRegistry::default();
        assert!(reg.is_system(&"void".into()));
        assert!(reg.is_system(&"int".into()));
        assert!(!reg.is_system(&"voidling.T".into()));
    }

    #[test]
    fn method_signature_matches_hand_encoding() {
        let model = fixture();
        let reg = SystemRegistry::default();
        let mut ctx = EncodingContext::new();
        let f = MethodRef::new("app.B", "onCreate", vec![], "void");
        let sig = method_signature(&f, &model, &reg, &mut ctx).unwrap();
        assert_eq!(
            sig.as_str(),
            "android.app.Activity[]()void{android.util.Log.d(java.lang.String,java.lang.String)int}"
        );
    }

    #[test]
    fn empty_callee_set_gives_empty_braces() {
        let mut model = fixture();
        let host: TypeRef = "app.B".into();
        model
            .classes
            .get_mut(&host)
            .unwrap()
            .methods
            .push(MethodDef {
                name: "quiet".into(),
                params: vec![],
                ret: "void".into(),
                declared_overrides: None,
                body: vec![Instruction::Return { src: None }],
            });
        let reg = SystemRegistry::default();
        let mut ctx = EncodingContext::new();
        let sig = method_signature(
            &MethodRef::new("app.B", "quiet", vec![], "void"),
            &model,
            &reg,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(sig.as_str(), "android.app.Activity[]()void{}");
    }

    #[test]
    fn mutual_recursion_terminates_and_is_deterministic() {
        let call = |name: &str| Instruction::Invoke {
            dst: None,
            callee: MethodRef::new("app.R", name, vec![], "void"),
            receiver: None,
            args: vec![],
        };
        let method = |name: &str, callee: &str| MethodDef {
            name: name.into(),
            params: vec![],
            ret: "void".into(),
            declared_overrides: None,
            body: vec![call(callee), Instruction::Return { src: None }],
        };
        let r = ClassDef {
            name: "app.R".into(),
            superclass: None,
            interfaces: vec![],
            methods: vec![method("a", "b"), method("b", "a")],
            origin: Default::default(),
        };
        let model = ProgramModel::new(vec![r], manifest(), vec![]);
        let reg = SystemRegistry::default();
        let fa = MethodRef::new("app.R", "a", vec![], "void");
        let fb = MethodRef::new("app.R", "b", vec![], "void");

        let mut ctx = EncodingContext::new();
        let sa = method_signature(&fa, &model, &reg, &mut ctx).unwrap();
        let sb = method_signature(&fb, &model, &reg, &mut ctx).unwrap();
        assert!(sa.as_str().contains(RECURSION_TOKEN));
        assert!(sb.as_str().contains(RECURSION_TOKEN));

        // Same texts regardless of which method is encoded first.
        let mut ctx2 = EncodingContext::new();
        let sb2 = method_signature(&fb, &model, &reg, &mut ctx2).unwrap();
        let sa2 = method_signature(&fa, &model, &reg, &mut ctx2).unwrap();
        assert_eq!(sa, sa2);
        assert_eq!(sb, sb2);
    }

    #[test]
    fn unresolved_callee_is_opaque_and_warned() {
        let mut model = fixture();
        let host: TypeRef = "app.B".into();
        model
            .classes
            .get_mut(&host)
            .unwrap()
            .methods
            .push(MethodDef {
                name: "ghostly".into(),
                params: vec![],
                ret: "void".into(),
                declared_overrides: None,
                body: vec![
                    Instruction::Invoke {
                        dst: None,
                        callee: MethodRef::new("gone.Dep", "use", vec![], "void"),
                        receiver: None,
                        args: vec![],
                    },
                    Instruction::Return { src: None },
                ],
            });
        let reg = SystemRegistry::default();
        let mut ctx = EncodingContext::new();
        let sig = method_signature(
            &MethodRef::new("app.B", "ghostly", vec![], "void"),
            &model,
            &reg,
            &mut ctx,
        )
        .unwrap();
        assert_eq!(sig.as_str(), "android.app.Activity[]()void{x()x{}}");
        assert_eq!(ctx.warnings().len(), 1);
    }

    #[test]
    fn canonical_compare_is_exact_equality() {
        let a = SignatureText::new("a()b{}");
        let b = SignatureText::new("a()b{}");
        let c = SignatureText::new("a()b{c.d()e}");
        assert!(canonical_compare(&a, &b));
        assert!(!canonical_compare(&a, &c));
    }

    #[test]
    fn emitted_signatures_reparse_byte_identically() {
        let model = fixture();
        let reg = SystemRegistry::default();
        let mut ctx = EncodingContext::new();
        let f = MethodRef::new("app.B", "onCreate", vec![], "void");
        let sig = method_signature(&f, &model, &reg, &mut ctx).unwrap();
        let parsed = parse_signature(sig.as_str()).unwrap();
        assert_eq!(parsed.to_string(), sig.as_str());
    }

    #[test]
    fn parser_handles_nested_and_opaque_entries() {
        let text = "android.app.Activity[]()void{x()x{};android.util.Log.d(java.lang.String)int;java.lang.Object[]()void{@rec}}";
        let parsed = parse_signature(text).unwrap();
        assert_eq!(parsed.to_string(), text);
        assert_eq!(parsed.callees.len(), 3);
    }

    #[test]
    fn parser_rejects_trailing_garbage() {
        assert!(parse_signature("a()b{}!").is_err());
        assert!(parse_signature("a(b").is_err());
    }
}
