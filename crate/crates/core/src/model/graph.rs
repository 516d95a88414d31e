//! Parsed architecture models: elements, members, annotations and relations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagramKind {
    ClassDiagram,
    ComponentDiagram,
}

impl DiagramKind {
    /// Short name used on the command line and in model file names.
    pub fn short_name(self) -> &'static str {
        match self {
            DiagramKind::ClassDiagram => "class",
            DiagramKind::ComponentDiagram => "component",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "class" | "classdiagram" => Some(DiagramKind::ClassDiagram),
            "component" | "componentdiagram" => Some(DiagramKind::ComponentDiagram),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Class,
    Component,
    Interface,
}

impl ElementKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ElementKind::Class => "class",
            ElementKind::Component => "component",
            ElementKind::Interface => "interface",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemberKind {
    Attribute,
    Operation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Member {
    pub name: String,
    pub kind: MemberKind,
    pub visibility: Visibility,
    pub is_static: bool,
    /// Normalized parameter list text; `None` for attributes.
    pub params: Option<String>,
    /// Attribute type or operation return type.
    pub type_ref: Option<String>,
}

impl Member {
    pub fn is_constructor_of(&self, element: &str) -> bool {
        self.kind == MemberKind::Operation && self.name == element
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnnotationKey {
    Singleton,
    Cached,
    DataMinimized,
    Encrypted,
    Other(String),
}

impl AnnotationKey {
    /// Stereotype spelling used inside `<< >>`.
    pub fn stereotype(&self) -> &str {
        match self {
            AnnotationKey::Singleton => "singleton",
            AnnotationKey::Cached => "cached",
            AnnotationKey::DataMinimized => "data_minimized",
            AnnotationKey::Encrypted => "encrypted",
            AnnotationKey::Other(s) => s,
        }
    }

    pub fn from_stereotype(s: &str) -> Self {
        match s {
            "singleton" => AnnotationKey::Singleton,
            "cached" => AnnotationKey::Cached,
            "data_minimized" => AnnotationKey::DataMinimized,
            "encrypted" => AnnotationKey::Encrypted,
            other => AnnotationKey::Other(other.to_string()),
        }
    }
}

impl fmt::Display for AnnotationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.stereotype())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annotation {
    pub key: AnnotationKey,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelElement {
    pub name: String,
    pub kind: ElementKind,
    pub members: Vec<Member>,
    pub annotations: Vec<Annotation>,
}

impl ModelElement {
    pub fn new(name: impl Into<String>, kind: ElementKind) -> Self {
        ModelElement { name: name.into(), kind, members: Vec::new(), annotations: Vec::new() }
    }

    pub fn annotation(&self, key: &AnnotationKey) -> Option<&Annotation> {
        self.annotations.iter().find(|a| &a.key == key)
    }

    pub fn member(&self, name: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Association,
    Dependency,
    Realization,
    Composition,
}

impl RelationKind {
    pub fn arrow(self) -> &'static str {
        match self {
            RelationKind::Association => "-->",
            RelationKind::Dependency => "..>",
            RelationKind::Realization => "..|>",
            RelationKind::Composition => "*--",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub from: String,
    pub to: String,
    pub kind: RelationKind,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum GraphError {
    #[error("element {0:?} already exists")]
    DuplicateElement(String),
    #[error("element {element:?} declares member {member:?} more than once")]
    DuplicateMember { element: String, member: String },
    #[error("element {element:?} carries annotation <<{key}>> more than once")]
    DuplicateAnnotation { element: String, key: String },
    #[error("relation endpoint {0:?} is not an element of the model")]
    DanglingEndpoint(String),
    #[error("relation {from} {arrow} {to} already exists")]
    DuplicateRelation { from: String, to: String, arrow: String },
    #[error("no element named {0:?}")]
    UnknownElement(String),
}

/// Elements and relations keep declaration order; names are unique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelGraph {
    pub diagram_kind: DiagramKind,
    pub elements: Vec<ModelElement>,
    pub relations: Vec<Relation>,
}

impl ModelGraph {
    pub fn new(diagram_kind: DiagramKind) -> Self {
        ModelGraph { diagram_kind, elements: Vec::new(), relations: Vec::new() }
    }

    pub fn element(&self, name: &str) -> Option<&ModelElement> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.element(name).is_some()
    }

    pub fn element_names(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|e| e.name.as_str())
    }

    pub fn insert_element(&mut self, element: ModelElement) -> Result<(), GraphError> {
        if self.contains(&element.name) {
            return Err(GraphError::DuplicateElement(element.name));
        }
        check_element(&element)?;
        self.elements.push(element);
        Ok(())
    }

    /// Removes the element and every relation touching it.
    pub fn remove_element(&mut self, name: &str) -> Result<ModelElement, GraphError> {
        let idx = self
            .elements
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| GraphError::UnknownElement(name.to_string()))?;
        self.relations.retain(|r| r.from != name && r.to != name);
        Ok(self.elements.remove(idx))
    }

    pub fn insert_relation(&mut self, relation: Relation) -> Result<(), GraphError> {
        for end in [&relation.from, &relation.to] {
            if !self.contains(end) {
                return Err(GraphError::DanglingEndpoint(end.clone()));
            }
        }
        if self
            .relations
            .iter()
            .any(|r| r.from == relation.from && r.to == relation.to && r.kind == relation.kind)
        {
            return Err(GraphError::DuplicateRelation {
                from: relation.from,
                to: relation.to,
                arrow: relation.kind.arrow().into(),
            });
        }
        self.relations.push(relation);
        Ok(())
    }

    pub fn remove_relation(&mut self, from: &str, to: &str, kind: RelationKind) -> bool {
        let before = self.relations.len();
        self.relations.retain(|r| !(r.from == from && r.to == to && r.kind == kind));
        before != self.relations.len()
    }

    /// True if any relation joins `a` and `b`, in either direction.
    pub fn connected(&self, a: &str, b: &str) -> bool {
        self.relations
            .iter()
            .any(|r| (r.from == a && r.to == b) || (r.from == b && r.to == a))
    }

    /// Checks every graph invariant.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut names = BTreeSet::new();
        for e in &self.elements {
            if !names.insert(e.name.as_str()) {
                return Err(GraphError::DuplicateElement(e.name.clone()));
            }
            check_element(e)?;
        }
        let mut seen = BTreeSet::new();
        for r in &self.relations {
            for end in [&r.from, &r.to] {
                if !names.contains(end.as_str()) {
                    return Err(GraphError::DanglingEndpoint(end.clone()));
                }
            }
            if !seen.insert((r.from.as_str(), r.to.as_str(), r.kind)) {
                return Err(GraphError::DuplicateRelation {
                    from: r.from.clone(),
                    to: r.to.clone(),
                    arrow: r.kind.arrow().into(),
                });
            }
        }
        Ok(())
    }
}

fn check_element(e: &ModelElement) -> Result<(), GraphError> {
    let mut members = BTreeSet::new();
    for m in &e.members {
        if !members.insert(m.name.as_str()) {
            return Err(GraphError::DuplicateMember { element: e.name.clone(), member: m.name.clone() });
        }
    }
    let mut keys = BTreeSet::new();
    for a in &e.annotations {
        if !keys.insert(&a.key) {
            return Err(GraphError::DuplicateAnnotation { element: e.name.clone(), key: a.key.to_string() });
        }
    }
    Ok(())
}
