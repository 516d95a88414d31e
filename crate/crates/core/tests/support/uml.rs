// UML parser and checker test data shared by the unit tests and the acceptance suite.
// Pulled in with `include!`; the includer brings `proptest::prelude::*`, the model types
// and the synthesis functions into scope.

/// Compact rendering used by the hand-parsed oracles below:
/// `C|K|I Name<<key[:note]>>{members}` per element, then `From arrow To "label"`, joined by ` / `.
fn summary(g: &ModelGraph) -> String {
    let mut parts = Vec::new();
    for e in &g.elements {
        let mut s = format!(
            "{} {}",
            match e.kind {
                ElementKind::Class => "C",
                ElementKind::Component => "K",
                ElementKind::Interface => "I",
            },
            e.name
        );
        for a in &e.annotations {
            match &a.note {
                Some(n) => s.push_str(&format!("<<{}:{}>>", a.key, n)),
                None => s.push_str(&format!("<<{}>>", a.key)),
            }
        }
        if !e.members.is_empty() {
            let ms: Vec<String> = e
                .members
                .iter()
                .map(|m| {
                    let mut t = String::new();
                    if m.is_static {
                        t.push('s');
                    }
                    t.push(if m.visibility == Visibility::Public { '+' } else { '-' });
                    t.push_str(&m.name);
                    if let Some(p) = &m.params {
                        t.push_str(&format!("({p})"));
                    }
                    if let Some(ty) = &m.type_ref {
                        t.push_str(&format!(":{ty}"));
                    }
                    t
                })
                .collect();
            s.push_str(&format!("{{{}}}", ms.join(", ")));
        }
        parts.push(s);
    }
    for r in &g.relations {
        let mut s = format!("{} {} {}", r.from, r.kind.arrow(), r.to);
        if let Some(l) = &r.label {
            s.push_str(&format!(" {l:?}"));
        }
        parts.push(s);
    }
    parts.join(" / ")
}

const CAMPUSBIKE: &str = "@startuml
' reconstructed CampusBike class diagram
class UserLogin <<singleton>> {
  -UserLogin()
  {static} +getInstance(): UserLogin
  +login(user: String, password: String): Boolean
}
class Registration <<data_minimized>> {
  -name: String
  -email: String
}
class ViewBikes <<cached>> {
  +listNearby(location: UserLocation, radius: Double): List<Bike>
}
class UserLocation <<data_minimized>> {
  -latitude: Double
  -longitude: Double
}
class Reservation <<encrypted>> {
  +reserve(bike: Bike, slot: TimeSlot): Boolean
}
class Payment
class Bike
Registration --> UserLogin
ViewBikes ..> UserLocation : uses
ViewBikes --> Bike
Reservation --> Bike
Reservation ..> Payment : pay-and-reserve
@enduml
";

const VALID: &[(&str, &str)] = &[
    ("@startuml\n@enduml", ""),
    ("@startuml\n@enduml\n", ""),
    ("\n\n@startuml\n\n@enduml\n\n", ""),
    ("@startuml\nclass A\n@enduml", "C A"),
    ("@startuml\ncomponent Web\n@enduml", "K Web"),
    ("@startuml\ninterface IRepo\n@enduml", "I IRepo"),
    ("@startuml\nclass A {}\n@enduml", "C A"),
    ("@startuml\nclass A {\n}\n@enduml", "C A"),
    ("@startuml\nclass A { +x }\n@enduml", "C A{+x}"),
    ("@startuml\nclass A { -x: int }\n@enduml", "C A{-x:int}"),
    ("@startuml\nclass A { +run() }\n@enduml", "C A{+run()}"),
    ("@startuml\nclass A { +run(): void }\n@enduml", "C A{+run():void}"),
    ("@startuml\nclass A { +add(a: int,b: int): int }\n@enduml", "C A{+add(a: int, b: int):int}"),
    ("@startuml\nclass A { {static} +get(): A }\n@enduml", "C A{s+get():A}"),
    ("@startuml\nclass A { {static}+get() }\n@enduml", "C A{s+get()}"),
    (
        "@startuml\nclass UserLogin <<singleton>> { -UserLogin(); {static} +getInstance() }\n@enduml",
        "C UserLogin<<singleton>>{-UserLogin(), s+getInstance()}",
    ),
    ("@startuml\nclass A {\n  +x\n  -y: Str\n  +f()\n}\n@enduml", "C A{+x, -y:Str, +f()}"),
    ("@startuml\nclass A {\n  ' note\n  +x\n}\n@enduml", "C A{+x}"),
    ("@startuml\nclass A { +x; +y\n +z }\n@enduml", "C A{+x, +y, +z}"),
    ("@startuml\nclass A { ;; +x ;; }\n@enduml", "C A{+x}"),
    ("@startuml\nclass A <<cached>>\n@enduml", "C A<<cached>>"),
    ("@startuml\nclass A <<data_minimized>>\n@enduml", "C A<<data_minimized>>"),
    ("@startuml\nclass A <<encrypted>>\n@enduml", "C A<<encrypted>>"),
    ("@startuml\nclass A <<cached>> <<encrypted>>\n@enduml", "C A<<cached>><<encrypted>>"),
    ("@startuml\nclass A <<cached>><<singleton>>\n@enduml", "C A<<cached>><<singleton>>"),
    ("@startuml\nclass A <<cached: ttl 60s>>\n@enduml", "C A<<cached:ttl 60s>>"),
    ("@startuml\nclass A <<cached:>>\n@enduml", "C A<<cached>>"),
    ("@startuml\nclass A <<cached: a:b>>\n@enduml", "C A<<cached:a:b>>"),
    ("@startuml\ncomponent Gw <<gateway>>\n@enduml", "K Gw<<gateway>>"),
    ("@startuml\nclass A <<Singleton>>\n@enduml", "C A<<singleton>>"),
    ("@startuml\nclass A << cached >>\n@enduml", "C A<<cached>>"),
    ("@startuml\nclass A\nclass B\nA --> B\n@enduml", "C A / C B / A --> B"),
    ("@startuml\nclass A\nclass B\nA ..> B\n@enduml", "C A / C B / A ..> B"),
    ("@startuml\nclass A\ninterface I\nA ..|> I\n@enduml", "C A / I I / A ..|> I"),
    ("@startuml\nclass A\nclass B\nA *-- B\n@enduml", "C A / C B / A *-- B"),
    ("@startuml\nclass A\nclass B\nA --> B : uses\n@enduml", "C A / C B / A --> B \"uses\""),
    ("@startuml\nclass A\nclass B\nA-->B:owns many\n@enduml", "C A / C B / A --> B \"owns many\""),
    ("@startuml\nclass A\nclass B\nA --> B : key: value\n@enduml", "C A / C B / A --> B \"key: value\""),
    ("@startuml\nA --> B\nclass A\nclass B\n@enduml", "C A / C B / A --> B"),
    ("@startuml\nclass A\nA --> A\n@enduml", "C A / A --> A"),
    ("@startuml\nclass A\nclass B\nA --> B\nB --> A\n@enduml", "C A / C B / A --> B / B --> A"),
    ("@startuml\nclass A\nclass B\nA --> B\nA ..> B\n@enduml", "C A / C B / A --> B / A ..> B"),
    ("@startuml\n' header\nclass A\n  ' indented\n@enduml", "C A"),
    ("@startuml\n\tclass A\n  class B\n@enduml", "C A / C B"),
    ("@startuml\r\nclass A { +x }\r\n@enduml\r\n", "C A{+x}"),
    ("@startuml  \nclass A   \n@enduml   \n", "C A"),
    ("@startuml\nclass _Base_1\n@enduml", "C _Base_1"),
    ("@startuml\nclass classic\nclassic --> classic\n@enduml", "C classic / classic --> classic"),
    (
        "@startuml\ncomponent Web\ncomponent Api\ninterface Rest\nApi ..|> Rest\nWeb ..> Rest : calls\n@enduml",
        "K Web / K Api / I Rest / Api ..|> Rest / Web ..> Rest \"calls\"",
    ),
    ("@startuml\nclass A { {static} -instance: A }\n@enduml", "C A{s-instance:A}"),
    ("@startuml\nclass A { +items: List<Bike> }\n@enduml", "C A{+items:List<Bike>}"),
    ("@startuml\nclass A { +m: Map<K, V> }\n@enduml", "C A{+m:Map<K, V>}"),
    ("@startuml\nclass A { +f( ) }\n@enduml", "C A{+f()}"),
    ("@startuml\nclass A { +f() : int }\n@enduml", "C A{+f():int}"),
    ("@startuml\nclass A { +x : int }\n@enduml", "C A{+x:int}"),
    (
        "@startuml\nclass ViewBikes <<cached>> {\n  +list(): List<Bike>\n}\n@enduml",
        "C ViewBikes<<cached>>{+list():List<Bike>}",
    ),
    ("@startuml\nclass A { +x ' trailing\n}\n@enduml", "C A{+x}"),
    ("@startuml\n\nclass A\n\n\n@enduml\n\n  \n", "C A"),
    ("@startuml\nclass A { +x }\nclass B { +x }\n@enduml", "C A{+x} / C B{+x}"),
    ("@startuml\nclass A {{static} +x}\n@enduml", "C A{s+x}"),
    ("@startuml\nclass A <<other_tag>> { -secret }\n@enduml", "C A<<other_tag>>{-secret}"),
    (
        CAMPUSBIKE,
        "C UserLogin<<singleton>>{-UserLogin(), s+getInstance():UserLogin, +login(user: String, password: String):Boolean} / \
         C Registration<<data_minimized>>{-name:String, -email:String} / \
         C ViewBikes<<cached>>{+listNearby(location: UserLocation, radius: Double):List<Bike>} / \
         C UserLocation<<data_minimized>>{-latitude:Double, -longitude:Double} / \
         C Reservation<<encrypted>>{+reserve(bike: Bike, slot: TimeSlot):Boolean} / C Payment / C Bike / \
         Registration --> UserLogin / ViewBikes ..> UserLocation \"uses\" / ViewBikes --> Bike / \
         Reservation --> Bike / Reservation ..> Payment \"pay-and-reserve\"",
    ),
];

/// (script, line, fragment of the expected-token text)
const MALFORMED: &[(&str, usize, &str)] = &[
    ("", 1, "@startuml"),
    ("class A\n", 1, "@startuml"),
    ("\n\nclass A\n@enduml", 3, "@startuml"),
    ("@startuml\nclass A\n", 2, "@enduml"),
    ("@startuml", 1, "@enduml"),
    ("@startuml title\n@enduml", 1, "after `@startuml`"),
    ("@startuml\nclass A\n@enduml\nclass B\n", 4, "end of script"),
    ("@startuml\nclass\n@enduml", 2, "element name"),
    ("@startuml\nclass 1A\n@enduml", 2, "element name"),
    ("@startuml\nclass A {\n  +x\n@enduml", 4, "visibility"),
    ("@startuml\nclass A { +x\n", 2, "`}`"),
    ("@startuml\nclass A { x }\n@enduml", 2, "visibility"),
    ("@startuml\nclass A { #x }\n@enduml", 2, "visibility"),
    ("@startuml\nclass A { +x +y }\n@enduml", 2, "after member"),
    ("@startuml\nclass A { +f(a }\n@enduml", 2, "`)`"),
    ("@startuml\nclass A { +x: }\n@enduml", 2, "type name"),
    ("@startuml\nclass A <<cached\n@enduml", 2, "`>>`"),
    ("@startuml\nclass A <<>>\n@enduml", 2, "stereotype name"),
    ("@startuml\nclass A <<cached>> <<cached>>\n@enduml", 2, "at most once"),
    ("@startuml\nclass A { +x; +x }\n@enduml", 2, "not already declared"),
    ("@startuml\nclass A\nA --> Ghost\n@enduml", 3, "declared element"),
    ("@startuml\nclass A\nclass B\nA --> B\nA --> B\n@enduml", 5, "not declared before"),
    ("@startuml\nclass A\nclass B\nA -> B\n@enduml", 4, "relation arrow"),
    ("@startuml\nclass A\nclass B\nA <|-- B\n@enduml", 4, "relation arrow"),
    ("@startuml\nclass A\nclass B\nA --> B :\n@enduml", 4, "relation label"),
    ("@startuml\nclass A\nclass B\nA --> B extra\n@enduml", 4, "after relation"),
    ("@startuml\nabstract class A\n@enduml", 2, "relation arrow"),
    ("@startuml\nclass A { +x } trailing\n@enduml", 2, "after declaration"),
    ("@startuml\n  -x\n@enduml", 2, "a declaration, a relation"),
    ("@startuml\nclass A\nA --> class\n@enduml", 3, "element name"),
    ("@startuml\nclass A { +f(x)) }\n@enduml", 2, "after member"),
    ("@startuml\n@startuml\n@enduml", 2, "a declaration, a relation"),
    ("@startuml\nclass A\n@end\n@enduml", 3, "a declaration, a relation"),
    ("@startuml\nclass A { +f(a(b)) }\n@enduml", 2, "`)`"),
];

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z_][A-Za-z0-9_]{0,6}".prop_filter("keyword", |s| !matches!(s.as_str(), "class" | "component" | "interface"))
}

fn member() -> impl Strategy<Value = Member> {
    let params = prop::option::of(prop::sample::select(vec!["", "a: Int", "a: Int, b: List<Bike>", "x"]));
    let ty = prop::option::of(prop::sample::select(vec!["Int", "List<Bike>", "Map<K, V>", "Bike"]));
    (ident(), any::<bool>(), any::<bool>(), params, ty).prop_map(|(name, public, is_static, params, ty)| Member {
        name,
        kind: if params.is_some() { MemberKind::Operation } else { MemberKind::Attribute },
        visibility: if public { Visibility::Public } else { Visibility::Private },
        is_static,
        params: params.map(str::to_string),
        type_ref: ty.map(str::to_string),
    })
}

fn annotation() -> impl Strategy<Value = Annotation> {
    let key = prop_oneof![
        Just(AnnotationKey::Singleton),
        Just(AnnotationKey::Cached),
        Just(AnnotationKey::DataMinimized),
        Just(AnnotationKey::Encrypted),
        "x_[a-z]{1,5}".prop_map(AnnotationKey::Other),
    ];
    (key, prop::option::of(prop::sample::select(vec!["ttl 60s", "gdpr", "a:b"])))
        .prop_map(|(key, note)| Annotation { key, note: note.map(str::to_string) })
}

fn element() -> impl Strategy<Value = ModelElement> {
    let kind = prop::sample::select(vec![ElementKind::Class, ElementKind::Component, ElementKind::Interface]);
    (ident(), kind, prop::collection::vec(member(), 0..5), prop::collection::vec(annotation(), 0..3)).prop_map(
        |(name, kind, members, annotations)| {
            let mut e = ModelElement::new(name, kind);
            for m in members {
                if e.member(&m.name).is_none() {
                    e.members.push(m);
                }
            }
            for a in annotations {
                if e.annotation(&a.key).is_none() {
                    e.annotations.push(a);
                }
            }
            e
        },
    )
}

fn graph() -> impl Strategy<Value = ModelGraph> {
    let kinds = vec![RelationKind::Association, RelationKind::Dependency, RelationKind::Realization, RelationKind::Composition];
    let rels = prop::collection::vec(
        (any::<prop::sample::Index>(), any::<prop::sample::Index>(), prop::sample::select(kinds), prop::option::of("[a-z][a-z -]{0,8}[a-z]")),
        0..8,
    );
    (prop::collection::vec(element(), 0..6), rels).prop_map(|(elements, rels)| {
        let mut g = ModelGraph::new(DiagramKind::ClassDiagram);
        for e in elements {
            let _ = g.insert_element(e);
        }
        if !g.elements.is_empty() {
            for (a, b, kind, label) in rels {
                let from = g.elements[a.index(g.elements.len())].name.clone();
                let to = g.elements[b.index(g.elements.len())].name.clone();
                let _ = g.insert_relation(Relation { from, to, kind, label });
            }
        }
        g
    })
}

/// Brute-force singleton evaluation over the printed normal form of one element.
fn singleton_oracle(printed: &str, name: &str) -> Vec<CheckReason> {
    let lines: Vec<&str> = printed.lines().collect();
    let start = lines.iter().position(|l| {
        ["class", "component", "interface"].iter().any(|kw| {
            l.strip_prefix(kw).and_then(|r| r.strip_prefix(' ')).is_some_and(|r| {
                r.split([' ', '{']).next() == Some(name)
            })
        })
    });
    let start = start.expect("element printed");
    let header = lines[start];
    let mut body = Vec::new();
    if header.ends_with('{') {
        for l in &lines[start + 1..] {
            if *l == "}" {
                break;
            }
            body.push(l.trim());
        }
    }
    let mut reasons = Vec::new();
    if !header.contains("<<singleton>>") && !header.contains("<<singleton:") {
        reasons.push(CheckReason::MissingAnnotation(AnnotationKey::Singleton));
    }
    let ctor = format!("+{name}(");
    if body.iter().any(|l| l.trim_start_matches("{static} ").starts_with(&ctor)) {
        reasons.push(CheckReason::PublicConstructor);
    }
    if !body.iter().any(|l| l.starts_with("{static} +") && l.contains('(')) {
        reasons.push(CheckReason::NoStaticAccessor);
    }
    reasons
}

fn singleton_candidate() -> impl Strategy<Value = (ModelGraph, String)> {
    // members drawn so constructors and accessors show up often
    let special = prop_oneof![
        (any::<bool>(), any::<bool>()).prop_map(|(public, is_static)| Member {
            name: "Target".into(),
            kind: MemberKind::Operation,
            visibility: if public { Visibility::Public } else { Visibility::Private },
            is_static,
            params: Some(String::new()),
            type_ref: None,
        }),
        (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(public, is_static, op)| Member {
            name: "getInstance".into(),
            kind: if op { MemberKind::Operation } else { MemberKind::Attribute },
            visibility: if public { Visibility::Public } else { Visibility::Private },
            is_static,
            params: op.then(String::new),
            type_ref: Some("Target".into()),
        }),
        member(),
    ];
    (graph(), prop::collection::vec(special, 0..5), any::<bool>(), prop::option::of(Just("one session".to_string())))
        .prop_map(|(mut g, members, annotated, note)| {
            g.elements.retain(|e| e.name != "Target");
            g.relations.retain(|r| r.from != "Target" && r.to != "Target");
            let mut e = ModelElement::new("Target", ElementKind::Class);
            for m in members {
                if e.member(&m.name).is_none() {
                    e.members.push(m);
                }
            }
            if annotated {
                e.annotations.push(Annotation { key: AnnotationKey::Singleton, note });
            }
            g.elements.insert(0, e);
            (g, "Target".to_string())
        })
}

fn rename_others(g: &ModelGraph, keep: &str) -> ModelGraph {
    let rename = |n: &str| if n == keep { n.to_string() } else { format!("Z{n}") };
    let mut out = g.clone();
    for e in &mut out.elements {
        e.name = rename(&e.name);
    }
    for r in &mut out.relations {
        r.from = rename(&r.from);
        r.to = rename(&r.to);
    }
    out
}
