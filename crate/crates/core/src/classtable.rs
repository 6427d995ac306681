//! Validated class tables and the `fields` / `mbody` / `combody` lookups.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{name, Expr, FreeVars, Name, ANY, THIS};
use crate::parser::{parse_program, ClassDecl, ParseError, SourceProgram};

pub const OBJECT: &str = "Object";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("class `{0}` is declared more than once")]
    DuplicateClass(Name),
    #[error("class `{class}` extends unknown class `{superclass}`")]
    UnknownSuperclass { class: Name, superclass: Name },
    #[error("cyclic inheritance through `{0}`")]
    CyclicInheritance(Name),
    #[error("field `{field}` of `{class}` hides an inherited or earlier field")]
    FieldHiding { class: Name, field: Name },
    #[error("method `{method}` of `{class}` is overloaded")]
    Overloading { class: Name, method: Name },
    #[error("parameter `{param}` of `{class}.{method}` is declared twice")]
    DuplicateParam {
        class: Name,
        method: Name,
        param: Name,
    },
    #[error("`this` cannot be a parameter of `{class}.{method}`")]
    ThisParam { class: Name, method: Name },
    #[error("`any` used outside a codefinition in {context}")]
    AnyOutsideCodefinition { context: String },
    #[error("unbound variable `{var}` in {context}")]
    UnboundVariable { context: String, var: Name },
    #[error("unknown class `{class}` instantiated in {context}")]
    UnknownClass { context: String, class: Name },
    #[error("`new {class}` expects {expected} arguments, found {found} in {context}")]
    ConstructorArity {
        context: String,
        class: Name,
        expected: usize,
        found: usize,
    },
    #[error("codefinition of `{class}.{method}` may call `{method}` again")]
    CodefRecursion { class: Name, method: Name },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("unknown class `{0}`")]
    UnknownClass(Name),
    #[error("class `{class}` has no method `{method}`")]
    MethodNotFound { class: Name, method: Name },
    #[error("method `{class}.{method}` has no codefinition")]
    NoCodefinition { class: Name, method: Name },
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid program: {0}")]
    Validation(#[from] ValidationError),
}

/// A method declaration as seen from a class: `owner` is the declaring class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodInfo {
    pub owner: Name,
    pub name: Name,
    pub params: Vec<Name>,
    pub body: Expr,
    pub cobody: Option<Expr>,
}

#[derive(Debug, Clone)]
struct ClassInfo {
    superclass: Name,
    fields: Vec<Name>,
    methods: BTreeMap<Name, Arc<MethodInfo>>,
}

#[derive(Debug, Clone)]
pub struct ClassTable {
    classes: BTreeMap<Name, ClassInfo>,
    order: Vec<Name>,
}

/// A validated class table with an optional main expression.
#[derive(Debug, Clone)]
pub struct Program {
    pub table: ClassTable,
    pub main: Option<Expr>,
}

impl Program {
    pub fn from_source(src: SourceProgram) -> Result<Self, ValidationError> {
        let table = ClassTable::build(src.classes)?;
        if let Some(main) = &src.main {
            table.check_main(main)?;
        }
        Ok(Program {
            table,
            main: src.main,
        })
    }

    pub fn load(text: &str) -> Result<Self, LoadError> {
        Ok(Self::from_source(parse_program(text)?)?)
    }
}

impl ClassTable {
    pub fn build(decls: Vec<ClassDecl>) -> Result<Self, ValidationError> {
        let mut by_name: BTreeMap<Name, ClassDecl> = BTreeMap::new();
        let mut order = Vec::new();
        for d in decls {
            if d.name.as_ref() == OBJECT || by_name.contains_key(&d.name) {
                return Err(ValidationError::DuplicateClass(d.name));
            }
            order.push(d.name.clone());
            by_name.insert(d.name.clone(), d);
        }
        for d in by_name.values() {
            if d.superclass.as_ref() != OBJECT && !by_name.contains_key(&d.superclass) {
                return Err(ValidationError::UnknownSuperclass {
                    class: d.name.clone(),
                    superclass: d.superclass.clone(),
                });
            }
        }

        // Resolve classes parents-first; anything left over sits on a cycle.
        let mut classes: BTreeMap<Name, ClassInfo> = BTreeMap::new();
        classes.insert(
            name(OBJECT),
            ClassInfo {
                superclass: name(OBJECT),
                fields: vec![],
                methods: BTreeMap::new(),
            },
        );
        let mut pending: Vec<&ClassDecl> = order.iter().map(|c| &by_name[c]).collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for d in pending {
                match classes.get(&d.superclass) {
                    Some(parent) => {
                        let info = Self::resolve(d, parent)?;
                        classes.insert(d.name.clone(), info);
                    }
                    None => rest.push(d),
                }
            }
            if rest.len() == before {
                return Err(ValidationError::CyclicInheritance(rest[0].name.clone()));
            }
            pending = rest;
        }

        let table = ClassTable { classes, order };
        for c in &table.order {
            for m in table.classes[c].methods.values() {
                if &m.owner == c {
                    table.check_method(m)?;
                }
            }
        }
        table.check_codefinitions()?;
        Ok(table)
    }

    fn resolve(d: &ClassDecl, parent: &ClassInfo) -> Result<ClassInfo, ValidationError> {
        let mut fields = parent.fields.clone();
        for f in &d.fields {
            if fields.contains(&f.name) {
                return Err(ValidationError::FieldHiding {
                    class: d.name.clone(),
                    field: f.name.clone(),
                });
            }
            fields.push(f.name.clone());
        }
        let mut methods = parent.methods.clone();
        let mut own = BTreeSet::new();
        for m in &d.methods {
            let overloading = || ValidationError::Overloading {
                class: d.name.clone(),
                method: m.name.clone(),
            };
            if !own.insert(m.name.clone()) {
                return Err(overloading());
            }
            if let Some(inherited) = parent.methods.get(&m.name) {
                if inherited.params.len() != m.params.len() {
                    return Err(overloading());
                }
            }
            let mut params = Vec::new();
            for (_, p) in &m.params {
                if p.as_ref() == THIS {
                    return Err(ValidationError::ThisParam {
                        class: d.name.clone(),
                        method: m.name.clone(),
                    });
                }
                if params.contains(p) {
                    return Err(ValidationError::DuplicateParam {
                        class: d.name.clone(),
                        method: m.name.clone(),
                        param: p.clone(),
                    });
                }
                params.push(p.clone());
            }
            let info = MethodInfo {
                owner: d.name.clone(),
                name: m.name.clone(),
                params,
                body: m.body.clone(),
                cobody: m.cobody.clone(),
            };
            methods.insert(m.name.clone(), Arc::new(info));
        }
        Ok(ClassInfo {
            superclass: d.superclass.clone(),
            fields,
            methods,
        })
    }

    fn check_method(&self, m: &MethodInfo) -> Result<(), ValidationError> {
        let mut scope: BTreeSet<Name> = m.params.iter().cloned().collect();
        scope.insert(name(THIS));
        let ctx = format!("`{}.{}`", m.owner, m.name);
        self.check_expr(&m.body, &scope, false, &ctx)?;
        if let Some(co) = &m.cobody {
            self.check_expr(co, &scope, true, &format!("codefinition of {ctx}"))?;
        }
        Ok(())
    }

    fn check_main(&self, e: &Expr) -> Result<(), ValidationError> {
        self.check_expr(e, &BTreeSet::new(), false, "main")
    }

    /// Checks variables, `any` placement and constructor arities.
    pub fn check_expr(
        &self,
        e: &Expr,
        scope: &BTreeSet<Name>,
        allow_any: bool,
        context: &str,
    ) -> Result<(), ValidationError> {
        if !allow_any && e.contains_any() {
            return Err(ValidationError::AnyOutsideCodefinition {
                context: context.to_string(),
            });
        }
        if let Some(var) = e
            .free_vars()
            .into_iter()
            .find(|x| !scope.contains(x) && x.as_ref() != ANY)
        {
            return Err(ValidationError::UnboundVariable {
                context: context.to_string(),
                var,
            });
        }
        let mut err = None;
        e.walk(&mut |sub| {
            if let (None, Expr::New(c, args)) = (&err, sub) {
                match self.classes.get(c) {
                    None => {
                        err = Some(ValidationError::UnknownClass {
                            context: context.to_string(),
                            class: c.clone(),
                        })
                    }
                    Some(info) if info.fields.len() != args.len() => {
                        err = Some(ValidationError::ConstructorArity {
                            context: context.to_string(),
                            class: c.clone(),
                            expected: info.fields.len(),
                            found: args.len(),
                        })
                    }
                    Some(_) => {}
                }
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// A codefinition of `m` may not call, even through other methods, any
    /// method named `m`. Calls are resolved by name over every class, which
    /// over-approximates dynamic dispatch.
    fn check_codefinitions(&self) -> Result<(), ValidationError> {
        let mut graph: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
        for info in self.classes.values() {
            for m in info.methods.values() {
                let out = graph.entry(m.name.clone()).or_default();
                out.extend(m.body.called_methods());
                if let Some(co) = &m.cobody {
                    out.extend(co.called_methods());
                }
            }
        }
        let reaches = |from: &Name, target: &Name| {
            let mut seen = BTreeSet::new();
            let mut stack = vec![from.clone()];
            while let Some(n) = stack.pop() {
                if &n == target {
                    return true;
                }
                if seen.insert(n.clone()) {
                    stack.extend(graph.get(&n).into_iter().flatten().cloned());
                }
            }
            false
        };
        for c in &self.order {
            for m in self.classes[c].methods.values() {
                let Some(co) = m.cobody.as_ref().filter(|_| &m.owner == c) else {
                    continue;
                };
                if co.called_methods().iter().any(|n| reaches(n, &m.name)) {
                    return Err(ValidationError::CodefRecursion {
                        class: c.clone(),
                        method: m.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// User-declared classes in declaration order.
    pub fn classes(&self) -> &[Name] {
        &self.order
    }

    pub fn contains(&self, c: &str) -> bool {
        self.classes.contains_key(c)
    }

    pub fn superclass(&self, c: &str) -> Result<&Name, LookupError> {
        self.info(c).map(|i| &i.superclass)
    }

    fn info(&self, c: &str) -> Result<&ClassInfo, LookupError> {
        self.classes
            .get(c)
            .ok_or_else(|| LookupError::UnknownClass(name(c)))
    }

    /// Field names, inherited first, in declaration order.
    pub fn fields(&self, c: &str) -> Result<&[Name], LookupError> {
        self.info(c).map(|i| i.fields.as_slice())
    }

    pub fn mbody(&self, c: &str, m: &str) -> Result<&Arc<MethodInfo>, LookupError> {
        self.info(c)?
            .methods
            .get(m)
            .ok_or_else(|| LookupError::MethodNotFound {
                class: name(c),
                method: name(m),
            })
    }

    pub fn combody(&self, c: &str, m: &str) -> Result<&Expr, LookupError> {
        self.mbody(c, m)?
            .cobody
            .as_ref()
            .ok_or_else(|| LookupError::NoCodefinition {
                class: name(c),
                method: name(m),
            })
    }

    /// Names of all methods visible in `c`.
    pub fn methods(&self, c: &str) -> Result<impl Iterator<Item = &Arc<MethodInfo>>, LookupError> {
        Ok(self.info(c)?.methods.values())
    }

    pub fn has_codefinitions(&self) -> bool {
        self.classes
            .values()
            .any(|i| i.methods.values().any(|m| m.cobody.is_some()))
    }
}
