//! Structural validation of a loaded [`ProgramModel`].
//!
//! Violations are data, not errors: a report is returned even for badly
//! broken models, and each entry names the class, method and instruction
//! index it concerns. `validate` is pure.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{ClassDef, Instruction, MethodDef, ProgramModel, TypeRef};
use crate::sig::SystemRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    BadTypeName,
    HierarchyCycle,
    InterfaceCycle,
    DuplicateMethod,
    UseBeforeDef,
    MissingReturn,
    MisplacedReturn,
    RegisterGap,
    InvokeArityMismatch,
    BadSdkRange,
    DanglingComponent,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<TypeRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instruction: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(c) = &self.class {
            write!(f, " in {c}")?;
        }
        if let Some(m) = &self.method {
            write!(f, "::{m}")?;
        }
        if let Some(i) = self.instruction {
            write!(f, " at instruction {i}")?;
        }
        write!(f, ": {}", self.message)
    }
}

pub type ValidationReport = Vec<Violation>;

/// Characters that would collide with the signature grammar or the compact
/// method-reference form. Array types are not modeled; `[`/`]` are rejected.
const FORBIDDEN_NAME_CHARS: &[char] = &['(', ')', '{', '}', '[', ']', ',', ';', '#', '@'];

fn check_type_name(name: &TypeRef) -> Option<String> {
    let s = name.as_str();
    if s.is_empty() {
        return Some("empty type name".to_string());
    }
    if s.chars().any(char::is_whitespace) {
        return Some(format!("type name `{s}` contains whitespace"));
    }
    if let Some(c) = s.chars().find(|c| FORBIDDEN_NAME_CHARS.contains(c)) {
        return Some(format!("type name `{s}` contains forbidden character `{c}`"));
    }
    None
}

/// Checks every invariant of the model. An empty report means the model is
/// well-formed.
pub fn validate(model: &ProgramModel, registry: &SystemRegistry) -> ValidationReport {
    let mut report = Vec::new();

    for class in model.classes.values() {
        check_class(model, registry, class, &mut report);
    }
    check_manifest(model, &mut report);
    report
}

fn violation(
    kind: ViolationKind,
    class: Option<&TypeRef>,
    method: Option<&str>,
    instruction: Option<usize>,
    message: String,
) -> Violation {
    Violation {
        kind,
        class: class.cloned(),
        method: method.map(str::to_string),
        instruction,
        message,
    }
}

fn check_class(
    model: &ProgramModel,
    registry: &SystemRegistry,
    class: &ClassDef,
    report: &mut ValidationReport,
) {
    let cname = Some(&class.name);
    for name in type_names_of_class(class) {
        if let Some(msg) = check_type_name(name) {
            report.push(violation(ViolationKind::BadTypeName, cname, None, None, msg));
        }
    }

    // Superclass chain must be acyclic; it terminates at a system type or an
    // opaque external type (both are simply absent from `classes`).
    let mut seen = BTreeSet::new();
    seen.insert(class.name.clone());
    let mut cur = class.superclass.clone();
    while let Some(ty) = cur {
        if seen.contains(&ty) {
            report.push(violation(
                ViolationKind::HierarchyCycle,
                cname,
                None,
                None,
                format!("superclass chain of `{}` revisits `{}`", class.name, ty),
            ));
            break;
        }
        seen.insert(ty.clone());
        cur = match model.classes.get(&ty) {
            Some(c) => c.superclass.clone(),
            None => {
                // Leaves the model: system or external-opaque, both fine.
                let _ = registry.is_system(&ty);
                None
            }
        };
    }

    if interface_cycle(model, &class.name) {
        report.push(violation(
            ViolationKind::InterfaceCycle,
            cname,
            None,
            None,
            format!("interface graph reachable from `{}` has a cycle", class.name),
        ));
    }

    let mut sigs = BTreeSet::new();
    for method in &class.methods {
        if !sigs.insert((method.name.clone(), method.params.clone())) {
            report.push(violation(
                ViolationKind::DuplicateMethod,
                cname,
                Some(&method.name),
                None,
                format!(
                    "duplicate method `{}` with identical parameter types",
                    method.name
                ),
            ));
        }
        check_method(model, class, method, report);
    }
}

fn type_names_of_class(class: &ClassDef) -> Vec<&TypeRef> {
    let mut names = vec![&class.name];
    names.extend(class.superclass.iter());
    names.extend(class.interfaces.iter());
    for m in &class.methods {
        names.extend(m.params.iter());
        names.push(&m.ret);
        names.extend(m.declared_overrides.iter());
        for instr in &m.body {
            match instr {
                Instruction::ConstOther { ty, .. } => names.push(ty),
                Instruction::Invoke { callee, .. } => {
                    names.push(&callee.host);
                    names.extend(callee.params.iter());
                    names.push(&callee.ret);
                }
                Instruction::FieldPut { owner, .. } | Instruction::FieldGet { owner, .. } => {
                    names.push(owner)
                }
                _ => {}
            }
        }
    }
    names
}

fn interface_cycle(model: &ProgramModel, start: &TypeRef) -> bool {
    // DFS over the `interfaces` edges of app-defined classes.
    fn visit(
        model: &ProgramModel,
        ty: &TypeRef,
        stack: &mut BTreeSet<TypeRef>,
        done: &mut BTreeSet<TypeRef>,
    ) -> bool {
        if done.contains(ty) {
            return false;
        }
        if !stack.insert(ty.clone()) {
            return true;
        }
        let mut cyclic = false;
        if let Some(c) = model.classes.get(ty) {
            for i in &c.interfaces {
                if stack.contains(i) || visit(model, i, stack, done) {
                    cyclic = true;
                    break;
                }
            }
        }
        stack.remove(ty);
        done.insert(ty.clone());
        cyclic
    }
    visit(model, start, &mut BTreeSet::new(), &mut BTreeSet::new())
}

fn check_method(
    model: &ProgramModel,
    class: &ClassDef,
    method: &MethodDef,
    report: &mut ValidationReport,
) {
    let cname = Some(&class.name);
    let mname = Some(method.name.as_str());

    // Use-before-def over the linear body; parameters occupy registers
    // 0..params.len().
    let param_count = method.params.len() as u32;
    let mut defined: BTreeSet<u32> = (0..param_count).collect();
    let mut all_regs: BTreeSet<u32> = defined.clone();
    for (idx, instr) in method.body.iter().enumerate() {
        for r in instr.read_regs() {
            all_regs.insert(r);
            if !defined.contains(&r) {
                report.push(violation(
                    ViolationKind::UseBeforeDef,
                    cname,
                    mname,
                    Some(idx),
                    format!("register {r} used before definition"),
                ));
            }
        }
        if let Some(d) = instr.defined_reg() {
            all_regs.insert(d);
            defined.insert(d);
        }
        if let Instruction::Invoke { callee, args, .. } = instr {
            if let Some(target) = model.resolve_method(callee) {
                if target.params.len() != args.len() {
                    report.push(violation(
                        ViolationKind::InvokeArityMismatch,
                        cname,
                        mname,
                        Some(idx),
                        format!(
                            "call to `{callee}` passes {} argument(s), callee declares {}",
                            args.len(),
                            target.params.len()
                        ),
                    ));
                }
            } else if callee.params.len() != args.len() {
                report.push(violation(
                    ViolationKind::InvokeArityMismatch,
                    cname,
                    mname,
                    Some(idx),
                    format!(
                        "call to `{callee}` passes {} argument(s), reference declares {}",
                        args.len(),
                        callee.params.len()
                    ),
                ));
            }
        }
    }

    // Register indices must be dense: params and body registers form 0..=max.
    if let Some(&max) = all_regs.iter().next_back() {
        if all_regs.len() as u32 != max + 1 {
            report.push(violation(
                ViolationKind::RegisterGap,
                cname,
                mname,
                None,
                format!("registers are not dense (max {max}, {} distinct)", all_regs.len()),
            ));
        }
    }

    // Bodies are linear, so "exactly one terminal Return on every path"
    // means: non-empty body, a single Return, at the last index.
    let returns: Vec<usize> = method
        .body
        .iter()
        .enumerate()
        .filter(|(_, i)| matches!(i, Instruction::Return { .. }))
        .map(|(idx, _)| idx)
        .collect();
    match returns.as_slice() {
        [] => report.push(violation(
            ViolationKind::MissingReturn,
            cname,
            mname,
            None,
            "body has no terminal return".to_string(),
        )),
        [last] if *last == method.body.len() - 1 => {}
        other => {
            let bad = other
                .iter()
                .find(|&&i| i != method.body.len() - 1)
                .copied()
                .unwrap_or(other[0]);
            report.push(violation(
                ViolationKind::MisplacedReturn,
                cname,
                mname,
                Some(bad),
                "return must appear exactly once, as the last instruction".to_string(),
            ));
        }
    }
}

fn check_manifest(model: &ProgramModel, report: &mut ValidationReport) {
    let m = &model.manifest;
    if m.min_sdk < 1 || m.min_sdk > m.target_sdk {
        report.push(violation(
            ViolationKind::BadSdkRange,
            None,
            None,
            None,
            format!("min_sdk {} / target_sdk {} out of order", m.min_sdk, m.target_sdk),
        ));
    }
    for comp in &m.components {
        if !model.classes.contains_key(&comp.name) {
            report.push(violation(
                ViolationKind::DanglingComponent,
                Some(&comp.name),
                None,
                None,
                format!("manifest component `{}` has no class definition", comp.name),
            ));
        }
    }
}
