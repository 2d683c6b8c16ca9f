//! Possible constant values of string-typed registers.
//!
//! Representation and interpretation are separate: [`extract_expr`] builds a
//! [`StringExpr`] by a backward def-use walk, and [`evaluate`] interprets the
//! expression into a bounded [`StringValue`].
//!
//! Bodies in this IR are flat lists with no branch instructions; multiple
//! assignments to the same register model the arms of branching control flow
//! laid out sequentially. A read of register `r` at instruction `i` therefore
//! resolves to *every* definition of `r` at index `j <= i` as alternatives
//! (no kills). An instruction that both reads and writes `r` is a
//! self-feeding definition — the loop-append idiom — and evaluation widens
//! anything on such a cycle to [`StringValue::Top`] after one step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Instruction, MethodDef, MethodRef, ProgramModel, Reg, TypeRef};

/// Default bound on the size of a finite value set.
pub const DEFAULT_VALUE_CAP: usize = 64;

/// A definition site inside a method body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DefSite {
    pub method: MethodRef,
    pub index: usize,
}

/// Expression tree over string operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StringExpr {
    Const(String),
    Concat(Box<StringExpr>, Box<StringExpr>),
    /// Reference to a definition whose expansion is already in progress on
    /// the current walk; marks a def-use cycle.
    Var(DefSite),
    Unknown,
    /// Join of alternative reaching definitions.
    AnyOf(Vec<StringExpr>),
}

impl StringExpr {
    /// True when no [`StringExpr::Unknown`] leaf occurs anywhere in the tree.
    pub fn is_fully_known(&self) -> bool {
        match self {
            StringExpr::Const(_) => true,
            StringExpr::Concat(l, r) => l.is_fully_known() && r.is_fully_known(),
            StringExpr::Var(_) => true,
            StringExpr::Unknown => false,
            StringExpr::AnyOf(arms) => arms.iter().all(StringExpr::is_fully_known),
        }
    }

    /// True when some [`StringExpr::Var`] (cycle marker) occurs in the tree.
    pub fn has_cycle(&self) -> bool {
        match self {
            StringExpr::Const(_) | StringExpr::Unknown => false,
            StringExpr::Concat(l, r) => l.has_cycle() || r.has_cycle(),
            StringExpr::Var(_) => true,
            StringExpr::AnyOf(arms) => arms.iter().any(StringExpr::has_cycle),
        }
    }
}

/// Abstract string value: a bounded set of literals, or everything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StringValue {
    FiniteSet(BTreeSet<String>),
    Top,
}

impl StringValue {
    pub fn singleton(&self) -> Option<&str> {
        match self {
            StringValue::FiniteSet(s) if s.len() == 1 => s.iter().next().map(String::as_str),
            _ => None,
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, StringValue::Top)
    }

    pub fn contains(&self, v: &str) -> bool {
        match self {
            StringValue::FiniteSet(s) => s.contains(v),
            StringValue::Top => true,
        }
    }
}

impl fmt::Display for StringValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StringValue::Top => f.write_str("⊤"),
            StringValue::FiniteSet(s) => {
                f.write_str("{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Which operand of a builder call carries a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandRef {
    Receiver,
    Arg(usize),
}

/// String semantics of a builder-pattern API.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuilderSemantics {
    Identity(OperandRef),
    Concat(OperandRef, OperandRef),
}

/// Maps system methods (by host and name, any overload) to identity/concat
/// semantics so builder chains reduce to [`StringExpr::Concat`].
#[derive(Debug, Clone, Default)]
pub struct BuilderRegistry {
    map: BTreeMap<(TypeRef, String), BuilderSemantics>,
}

impl BuilderRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, host: TypeRef, name: impl Into<String>, sem: BuilderSemantics) {
        self.map.insert((host, name.into()), sem);
    }

    pub fn lookup(&self, callee: &MethodRef) -> Option<BuilderSemantics> {
        self.map
            .get(&(callee.host.clone(), callee.name.clone()))
            .copied()
    }

    /// Parses the JSON config format: a list of entries
    /// `{"method": "host#name", "semantics": "concat"|"identity",
    ///   "left"/"right"/"of": "receiver"|"argN"}`.
    pub fn from_json(text: &str) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Entry {
            method: String,
            semantics: String,
            #[serde(default)]
            of: Option<String>,
            #[serde(default)]
            left: Option<String>,
            #[serde(default)]
            right: Option<String>,
        }
        let entries: Vec<Entry> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut reg = BuilderRegistry::default();
        for e in entries {
            let (host, name) = e
                .method
                .split_once('#')
                .ok_or_else(|| format!("builder method `{}` must be host#name", e.method))?;
            let sem = match e.semantics.as_str() {
                "identity" => BuilderSemantics::Identity(parse_operand(
                    e.of.as_deref().unwrap_or("receiver"),
                )?),
                "concat" => BuilderSemantics::Concat(
                    parse_operand(e.left.as_deref().unwrap_or("receiver"))?,
                    parse_operand(e.right.as_deref().unwrap_or("arg0"))?,
                ),
                other => return Err(format!("unknown builder semantics `{other}`")),
            };
            reg.insert(TypeRef::new(host), name, sem);
        }
        Ok(reg)
    }
}

fn parse_operand(s: &str) -> Result<OperandRef, String> {
    if s == "receiver" {
        return Ok(OperandRef::Receiver);
    }
    s.strip_prefix("arg")
        .and_then(|n| n.parse().ok())
        .map(OperandRef::Arg)
        .ok_or_else(|| format!("unknown operand `{s}` (expected `receiver` or `argN`)"))
}

/// Oracle over string-typed registers, as consumed by intent resolution and
/// the taint engine's extra-key lookups.
pub trait StringOracle {
    /// Possible values of `reg` as read by the instruction at `site`.
    fn eval_reg(&self, method: &MethodRef, reg: Reg, site: usize) -> StringValue;
}

/// Intra-procedural string analysis over an immutable model. Pure; safe to
/// share across threads.
pub struct StringAnalyzer<'m> {
    model: &'m ProgramModel,
    builders: &'m BuilderRegistry,
    cap: usize,
}

impl<'m> StringAnalyzer<'m> {
    pub fn new(model: &'m ProgramModel, builders: &'m BuilderRegistry) -> Self {
        StringAnalyzer {
            model,
            builders,
            cap: DEFAULT_VALUE_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    /// Builds the expression for register `reg` as read at instruction
    /// `site`. Worst case is [`StringExpr::Unknown`]; this never fails.
    pub fn extract_expr(&self, method: &MethodRef, reg: Reg, site: usize) -> StringExpr {
        let Some(def) = self.model.resolve_method(method) else {
            return StringExpr::Unknown;
        };
        let mut stack = Vec::new();
        self.value_of(method, def, reg, site, &mut stack)
    }

    /// Bottom-up interpretation of an expression. Concatenation is the
    /// pairwise product of finite sets; crossing the cap, an `Unknown` leaf
    /// or a def-use cycle yields `Top`.
    pub fn evaluate(&self, expr: &StringExpr) -> StringValue {
        match expr {
            StringExpr::Const(lit) => {
                StringValue::FiniteSet(std::iter::once(lit.clone()).collect())
            }
            StringExpr::Unknown => StringValue::Top,
            // One widening step: a definition on a cycle feeds itself, so its
            // value set would grow without bound.
            StringExpr::Var(_) => StringValue::Top,
            StringExpr::Concat(l, r) => {
                let (StringValue::FiniteSet(ls), StringValue::FiniteSet(rs)) =
                    (self.evaluate(l), self.evaluate(r))
                else {
                    return StringValue::Top;
                };
                if ls.len().saturating_mul(rs.len()) > self.cap {
                    return StringValue::Top;
                }
                let mut out = BTreeSet::new();
                for a in &ls {
                    for b in &rs {
                        out.insert(format!("{a}{b}"));
                    }
                }
                StringValue::FiniteSet(out)
            }
            StringExpr::AnyOf(arms) => {
                let mut out = BTreeSet::new();
                for arm in arms {
                    match self.evaluate(arm) {
                        StringValue::Top => return StringValue::Top,
                        StringValue::FiniteSet(s) => out.extend(s),
                    }
                    if out.len() > self.cap {
                        return StringValue::Top;
                    }
                }
                StringValue::FiniteSet(out)
            }
        }
    }

    fn value_of(
        &self,
        mref: &MethodRef,
        def: &MethodDef,
        reg: Reg,
        site: usize,
        stack: &mut Vec<usize>,
    ) -> StringExpr {
        let defs: Vec<usize> = def
            .body
            .iter()
            .enumerate()
            .take(site.saturating_add(1))
            .filter(|(_, instr)| instr.defined_reg() == Some(reg))
            .map(|(j, _)| j)
            .collect();
        if defs.is_empty() {
            // A parameter or an undefined register.
            return StringExpr::Unknown;
        }
        let mut arms = Vec::with_capacity(defs.len());
        for j in defs {
            if stack.contains(&j) {
                arms.push(StringExpr::Var(DefSite {
                    method: mref.clone(),
                    index: j,
                }));
            } else {
                stack.push(j);
                arms.push(self.def_expr(mref, def, j, stack));
                stack.pop();
            }
        }
        if arms.len() == 1 {
            arms.pop().unwrap()
        } else {
            StringExpr::AnyOf(arms)
        }
    }

    fn def_expr(
        &self,
        mref: &MethodRef,
        def: &MethodDef,
        index: usize,
        stack: &mut Vec<usize>,
    ) -> StringExpr {
        match &def.body[index] {
            Instruction::ConstString { literal, .. } => StringExpr::Const(literal.clone()),
            Instruction::Move { src, .. } => self.value_of(mref, def, *src, index, stack),
            Instruction::Concat { a, b, .. } => StringExpr::Concat(
                Box::new(self.value_of(mref, def, *a, index, stack)),
                Box::new(self.value_of(mref, def, *b, index, stack)),
            ),
            Instruction::Invoke {
                callee,
                receiver,
                args,
                ..
            } => match self.builders.lookup(callee) {
                Some(BuilderSemantics::Identity(op)) => {
                    self.operand_expr(mref, def, index, *receiver, args, op, stack)
                }
                Some(BuilderSemantics::Concat(l, r)) => StringExpr::Concat(
                    Box::new(self.operand_expr(mref, def, index, *receiver, args, l, stack)),
                    Box::new(self.operand_expr(mref, def, index, *receiver, args, r, stack)),
                ),
                None => StringExpr::Unknown,
            },
            // Field loads, extras, views and non-string constants are out of
            // the modeled operation set.
            _ => StringExpr::Unknown,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn operand_expr(
        &self,
        mref: &MethodRef,
        def: &MethodDef,
        index: usize,
        receiver: Option<Reg>,
        args: &[Reg],
        op: OperandRef,
        stack: &mut Vec<usize>,
    ) -> StringExpr {
        let reg = match op {
            OperandRef::Receiver => receiver,
            OperandRef::Arg(i) => args.get(i).copied(),
        };
        match reg {
            Some(r) => self.value_of(mref, def, r, index, stack),
            None => StringExpr::Unknown,
        }
    }
}

impl StringOracle for StringAnalyzer<'_> {
    fn eval_reg(&self, method: &MethodRef, reg: Reg, site: usize) -> StringValue {
        self.evaluate(&self.extract_expr(method, reg, site))
    }
}
